#pragma once

#include "seqdyn/stochastic/asclt.hpp"
#include "seqdyn/stochastic/deviations.hpp"
#include "seqdyn/stochastic/ensemble.hpp"
#include "seqdyn/stochastic/kantorovich.hpp"
#include "seqdyn/stochastic/observable.hpp"
#include "seqdyn/stochastic/parallel.hpp"
#include "seqdyn/stochastic/shadowing.hpp"
#include "seqdyn/stochastic/tail.hpp"
