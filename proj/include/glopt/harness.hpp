#pragma once

#include "glopt/harness/config.hpp"
#include "glopt/harness/lower_bound.hpp"
#include "glopt/harness/output.hpp"
#include "glopt/harness/runner.hpp"
#include "glopt/harness/verify_suite.hpp"
