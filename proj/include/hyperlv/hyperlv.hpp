#pragma once

#include "hyperlv/tensor.hpp"
#include "hyperlv/model.hpp"
#include "hyperlv/equilibrium.hpp"
#include "hyperlv/integrator.hpp"
#include "hyperlv/dynamics.hpp"
#include "hyperlv/harness.hpp"
