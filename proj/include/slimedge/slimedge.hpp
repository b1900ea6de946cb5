#pragma once

#include "slimedge/error.hpp"
#include "slimedge/domain.hpp"
#include "slimedge/cost_models.hpp"
#include "slimedge/random.hpp"
#include "slimedge/accuracy.hpp"
#include "slimedge/feature_bank.hpp"
#include "slimedge/surrogate.hpp"
#include "slimedge/fitness.hpp"
#include "slimedge/allocation.hpp"
#include "slimedge/sampler.hpp"
#include "slimedge/moo.hpp"
#include "slimedge/soga.hpp"
#include "slimedge/pipeline.hpp"
#include "slimedge/simlab.hpp"
#include "slimedge/io.hpp"
