#pragma once

#include "regime_lq/error.hpp"
#include "regime_lq/time_table.hpp"
#include "regime_lq/cone.hpp"
#include "regime_lq/model.hpp"
#include "regime_lq/validation.hpp"
#include "regime_lq/hamiltonians.hpp"
#include "regime_lq/riccati.hpp"
#include "regime_lq/feedback.hpp"
#include "regime_lq/random.hpp"
#include "regime_lq/simulation.hpp"
#include "regime_lq/verification.hpp"
#include "regime_lq/config.hpp"
#include "regime_lq/io.hpp"
#include "regime_lq/reference_models.hpp"
