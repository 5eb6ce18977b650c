#pragma once

#include "mbet/error.hpp"
#include "mbet/numerics.hpp"
#include "mbet/system_model.hpp"
#include "mbet/trigger_channel.hpp"
#include "mbet/simulator.hpp"
#include "mbet/bounds.hpp"
#include "mbet/scenario_io.hpp"
