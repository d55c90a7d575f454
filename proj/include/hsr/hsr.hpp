// Umbrella header.
#pragma once

#include "hsr/bench.hpp"
#include "hsr/blocks.hpp"
#include "hsr/hsio.hpp"
#include "hsr/layout.hpp"
#include "hsr/model.hpp"
#include "hsr/nn.hpp"
#include "hsr/quality.hpp"
#include "hsr/resize.hpp"
#include "hsr/ssm.hpp"
#include "hsr/tensor.hpp"
