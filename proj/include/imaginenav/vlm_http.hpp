#pragma once

// Live transport for the VLM scorer. Kept apart from planner.hpp so only the CLI pulls in the HTTP client.

#include <string>

#include "httplib.h"

#include "imaginenav/planner.hpp"

namespace imaginenav {

class HttpTransport : public VlmTransport {
public:
    explicit HttpTransport(const VlmSettings& settings) : settings_(settings) {
        if (settings_.url.empty())
            throw Error(ErrorCode::Config, "no VLM endpoint configured (set IMAGINENAV_VLM_URL)");
        auto scheme_end = settings_.url.find("://");
        if (scheme_end == std::string::npos) throw Error(ErrorCode::Config, "VLM URL needs a scheme: " + settings_.url);
        auto path_start = settings_.url.find('/', scheme_end + 3);
        base_ = settings_.url.substr(0, path_start);
        path_ = path_start == std::string::npos ? "/" : settings_.url.substr(path_start);
    }

    HttpReply post(const std::string& body) override {
        httplib::Client client(base_);
        auto secs = static_cast<time_t>(settings_.timeout_seconds);
        client.set_connection_timeout(secs);
        client.set_read_timeout(secs);
        client.set_write_timeout(secs);
        httplib::Headers headers;
        if (!settings_.api_key.empty()) headers.emplace("Authorization", "Bearer " + settings_.api_key);
        auto res = client.Post(path_, headers, body, "application/json");
        if (!res) throw Error(ErrorCode::Transport, "request failed: " + httplib::to_string(res.error()));
        return {res->status, res->body};
    }

    std::string name() const override { return "vlm"; }

private:
    VlmSettings settings_;
    std::string base_;
    std::string path_;
};

}  // namespace imaginenav
