#pragma once

// Umbrella header: the whole simulator.
#include "stripmc/analysis.hpp"
#include "stripmc/config.hpp"
#include "stripmc/density.hpp"
#include "stripmc/geometry.hpp"
#include "stripmc/grid.hpp"
#include "stripmc/laplace.hpp"
#include "stripmc/rng.hpp"
#include "stripmc/runner.hpp"
#include "stripmc/scattering.hpp"
#include "stripmc/transport.hpp"
#include "stripmc/vec2.hpp"
