#ifndef MARGIN_FORGE_MARGIN_FORGE_HPP
#define MARGIN_FORGE_MARGIN_FORGE_HPP

#include "margin_forge/encoding.hpp"
#include "margin_forge/errors.hpp"
#include "margin_forge/eval.hpp"
#include "margin_forge/feature_vector.hpp"
#include "margin_forge/io.hpp"
#include "margin_forge/kernel.hpp"
#include "margin_forge/model.hpp"
#include "margin_forge/random.hpp"
#include "margin_forge/smo.hpp"

#endif  // MARGIN_FORGE_MARGIN_FORGE_HPP
