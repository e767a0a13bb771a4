#pragma once

//
// This file is distributed under the Apache License v2.0. See LICENSE for
// details.
//

#include "so3ocp/common.hpp"
#include "so3ocp/so3.hpp"
#include "so3ocp/potential.hpp"
#include "so3ocp/integrator.hpp"
#include "so3ocp/extremal.hpp"
#include "so3ocp/sensitivity.hpp"
#include "so3ocp/shooting.hpp"
#include "so3ocp/scenario.hpp"
