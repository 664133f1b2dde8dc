#pragma once

#include "seqdyn/transfer/correlation.hpp"
#include "seqdyn/transfer/decay.hpp"
#include "seqdyn/transfer/kp.hpp"
#include "seqdyn/transfer/martingale.hpp"
#include "seqdyn/transfer/operator.hpp"
#include "seqdyn/transfer/piecewise.hpp"
