#pragma once

#include <string_view>

namespace imaginenav {

// Mirrors prompts/objectnav_v1.txt byte for byte; a test keeps the two in sync.
inline constexpr std::string_view kPromptTemplateId = "objectnav_v1";
inline constexpr std::string_view kPromptTemplate =
    R"PROMPT([system]
You are a navigation planner for a household robot searching for an object. You will see one image stitched from six views, each marked with an option letter in its top-left corner. Each view shows what the robot would observe from a candidate location it can walk to. Columns are depth slices: taller slices are nearer surfaces. Colored slices are recognized objects; the legend under the views names them. Gray slices are walls or empty space.
[user]
The navigation target is: {target}.
The available options are: {labels}.
Your choice should first be based on discovering navigation targets, followed by the potential of unexplored areas. Prefer a view where the {target} is visible. Otherwise prefer a view showing objects usually found near a {target}, or open space that leads somewhere new.
Answer with a single JSON object and nothing else, using exactly these keys: {"Reason": "<one short sentence>", "Choice": "<one option letter>"}
)PROMPT";

inline constexpr std::string_view kFormatReminder =
    "Your previous reply could not be used. Reply with only a JSON object of the form "
    "{\"Reason\": \"...\", \"Choice\": \"X\"} where X is one of the available option letters.";

}  // namespace imaginenav
