#pragma once

#include "pavg/expr.hpp"
#include "pavg/problem.hpp"
#include "pavg/averaging.hpp"
#include "pavg/degree.hpp"
#include "pavg/flow.hpp"
#include "pavg/zeros.hpp"
#include "pavg/casestudy.hpp"
#include "pavg/report.hpp"
