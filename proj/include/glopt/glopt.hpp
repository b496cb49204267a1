#pragma once

#include "glopt/errors.hpp"
#include "glopt/framework.hpp"
#include "glopt/numerics.hpp"
#include "glopt/online.hpp"
#include "glopt/optimizers.hpp"
#include "glopt/oracle.hpp"
#include "glopt/problems.hpp"
#include "glopt/record.hpp"
#include "glopt/rng.hpp"
#include "glopt/schedule.hpp"
#include "glopt/suite.hpp"
#include "glopt/verify.hpp"
