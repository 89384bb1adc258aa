#pragma once

#include "harvest/density.hpp"
#include "harvest/errors.hpp"
#include "harvest/hjb.hpp"
#include "harvest/io.hpp"
#include "harvest/model.hpp"
#include "harvest/optimize.hpp"
#include "harvest/sim.hpp"
#include "harvest/strategy.hpp"
