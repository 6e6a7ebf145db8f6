#pragma once

#include "satmap/arch.hpp"
#include "satmap/cnf.hpp"
#include "satmap/common.hpp"
#include "satmap/dfg.hpp"
#include "satmap/driver.hpp"
#include "satmap/mapping.hpp"
#include "satmap/regalloc.hpp"
#include "satmap/sat.hpp"
#include "satmap/scheduler.hpp"
#include "satmap/verifier.hpp"
