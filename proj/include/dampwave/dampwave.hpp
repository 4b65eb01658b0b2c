#pragma once

#include "dampwave/error.hpp"
#include "dampwave/expression.hpp"
#include "dampwave/grid.hpp"
#include "dampwave/coefficients.hpp"
#include "dampwave/schrodinger.hpp"
#include "dampwave/spectra.hpp"
#include "dampwave/eigencurve.hpp"
#include "dampwave/intersection.hpp"
#include "dampwave/threshold.hpp"
#include "dampwave/block_operator.hpp"
#include "dampwave/evolution.hpp"
#include "dampwave/config.hpp"
#include "dampwave/io.hpp"
#include "dampwave/pipeline.hpp"
