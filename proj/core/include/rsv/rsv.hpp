#pragma once

#include "rsv/backend.hpp"
#include "rsv/components.hpp"
#include "rsv/error.hpp"
#include "rsv/fcn.hpp"
#include "rsv/io.hpp"
#include "rsv/losses.hpp"
#include "rsv/metrics.hpp"
#include "rsv/morphology.hpp"
#include "rsv/optim.hpp"
#include "rsv/raster.hpp"
#include "rsv/roiar.hpp"
#include "rsv/tiling.hpp"
#include "rsv/trainer.hpp"
