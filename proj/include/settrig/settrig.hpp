#pragma once

#include "settrig/cli.hpp"
#include "settrig/config.hpp"
#include "settrig/explicit_map.hpp"
#include "settrig/invariance.hpp"
#include "settrig/io.hpp"
#include "settrig/lp.hpp"
#include "settrig/online.hpp"
#include "settrig/polytope.hpp"
#include "settrig/sim.hpp"
#include "settrig/types.hpp"
