#pragma once

#include "seqdyn/runner/cli.hpp"
#include "seqdyn/runner/config.hpp"
#include "seqdyn/runner/record.hpp"
#include "seqdyn/runner/scenarios.hpp"
#include "seqdyn/runner/toml.hpp"
