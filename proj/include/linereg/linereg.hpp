#pragma once

#include "linereg/ap_solver.hpp"
#include "linereg/config.hpp"
#include "linereg/errors.hpp"
#include "linereg/feature_fit.hpp"
#include "linereg/geometry.hpp"
#include "linereg/io.hpp"
#include "linereg/metrics.hpp"
#include "linereg/minimal_solvers.hpp"
#include "linereg/parallel.hpp"
#include "linereg/polynomial.hpp"
#include "linereg/registration.hpp"
#include "linereg/scan_io.hpp"
#include "linereg/synthetic.hpp"
#include "linereg/trajectory.hpp"
