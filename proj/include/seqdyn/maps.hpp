#pragma once

#include "seqdyn/maps/branch.hpp"
#include "seqdyn/maps/diagnostics.hpp"
#include "seqdyn/maps/interval_map.hpp"
#include "seqdyn/maps/partition.hpp"
#include "seqdyn/maps/sequence.hpp"
