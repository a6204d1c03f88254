#pragma once

#include "ctmflow/cost.hpp"
#include "ctmflow/csv.hpp"
#include "ctmflow/ctm.hpp"
#include "ctmflow/errors.hpp"
#include "ctmflow/network.hpp"
#include "ctmflow/program.hpp"
#include "ctmflow/robustness.hpp"
#include "ctmflow/scenario_io.hpp"
#include "ctmflow/solver.hpp"
#include "ctmflow/synthesis.hpp"
