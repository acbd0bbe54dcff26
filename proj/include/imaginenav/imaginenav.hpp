#pragma once

#include "imaginenav/core.hpp"
#include "imaginenav/world.hpp"
#include "imaginenav/image.hpp"
#include "imaginenav/sensor.hpp"
#include "imaginenav/controller.hpp"
#include "imaginenav/where2imagine.hpp"
#include "imaginenav/imagination.hpp"
#include "imaginenav/planner.hpp"
#include "imaginenav/runner.hpp"
