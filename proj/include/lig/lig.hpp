#pragma once

#include "lig/analysis.hpp"
#include "lig/convex.hpp"
#include "lig/dataset.hpp"
#include "lig/error.hpp"
#include "lig/exact.hpp"
#include "lig/experiment.hpp"
#include "lig/game.hpp"
#include "lig/generative.hpp"
#include "lig/io.hpp"
#include "lig/joint_action.hpp"
#include "lig/lp.hpp"
#include "lig/seed.hpp"
#include "lig/smooth.hpp"
