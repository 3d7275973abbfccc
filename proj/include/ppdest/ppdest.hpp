#pragma once

#include "ppdest/align.hpp"
#include "ppdest/bootstrap.hpp"
#include "ppdest/io.hpp"
#include "ppdest/numerics.hpp"
#include "ppdest/ppd.hpp"
#include "ppdest/rng.hpp"
#include "ppdest/shapefit.hpp"
#include "ppdest/simulate.hpp"
#include "ppdest/srvf.hpp"
#include "ppdest/types.hpp"
#include "ppdest/warpcoord.hpp"
