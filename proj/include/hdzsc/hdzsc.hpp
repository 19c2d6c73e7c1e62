#pragma once

// Umbrella header for the HDC zero-shot classification library.

#include "hdzsc/checkpoint.hpp"
#include "hdzsc/codebooks.hpp"
#include "hdzsc/encoder.hpp"
#include "hdzsc/error.hpp"
#include "hdzsc/hypervector.hpp"
#include "hdzsc/io.hpp"
#include "hdzsc/matrix.hpp"
#include "hdzsc/metrics.hpp"
#include "hdzsc/nn.hpp"
#include "hdzsc/rng.hpp"
#include "hdzsc/schema.hpp"
#include "hdzsc/synthetic.hpp"
#include "hdzsc/training.hpp"
