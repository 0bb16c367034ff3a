#pragma once

#include <doctest.h>

// Purely relative comparison; doctest's default adds an absolute slack of
// epsilon, which hides errors on small SI quantities. An exact zero keeps a
// vanishing absolute slack so that 0 == approx(0) holds.
inline doctest::Approx approx(double value) {
    return doctest::Approx(value).scale(value == 0.0 ? 1e-300 : 0.0);
}
