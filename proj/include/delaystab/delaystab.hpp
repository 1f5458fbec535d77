// Copyright (c) 2026 the delaystab authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "delaystab/analyze.hpp"
#include "delaystab/charfun.hpp"
#include "delaystab/hs.hpp"
#include "delaystab/io.hpp"
#include "delaystab/nbv.hpp"
#include "delaystab/norms.hpp"
#include "delaystab/perturbation.hpp"
#include "delaystab/polyroots.hpp"
#include "delaystab/rng.hpp"
#include "delaystab/simulate.hpp"
#include "delaystab/spectrum.hpp"
#include "delaystab/types.hpp"
