#pragma once

#include "gaussmi/active_loop.hpp"
#include "gaussmi/belief.hpp"
#include "gaussmi/camera.hpp"
#include "gaussmi/config.hpp"
#include "gaussmi/gauss_mi.hpp"
#include "gaussmi/image_io.hpp"
#include "gaussmi/loss.hpp"
#include "gaussmi/map_io.hpp"
#include "gaussmi/metrics.hpp"
#include "gaussmi/optimizer.hpp"
#include "gaussmi/planner.hpp"
#include "gaussmi/renderer.hpp"
#include "gaussmi/scene.hpp"
#include "gaussmi/types.hpp"
