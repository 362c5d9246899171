#pragma once

#include "hillkdv/errors.hpp"
#include "hillkdv/fft.hpp"
#include "hillkdv/fourier.hpp"
#include "hillkdv/monodromy.hpp"
#include "hillkdv/hill_matrix.hpp"
#include "hillkdv/spectrum.hpp"
#include "hillkdv/actions.hpp"
#include "hillkdv/riccati.hpp"
#include "hillkdv/kdv.hpp"
#include "hillkdv/estimates.hpp"
#include "hillkdv/config.hpp"
