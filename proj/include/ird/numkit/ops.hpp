#pragma once

#include <cstddef>
#include <vector>

#include "ird/numkit/tape.hpp"
#include "ird/numkit/tensor.hpp"

namespace ird::num {

// Plain (tape-free) kernels.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

// Tape ops. All throw InvalidInput on shape mismatch.

// y = xW + b. x is [n,k] or [k]; W is [k,m]; b is [m].
Var linear(Var x, Var w, Var b);
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double c);
Var relu(Var x);
Var sum(Var x);
Var sum_squares(Var x);
// Per-row squared Euclidean distance of two [n,d] matrices -> [n].
Var row_squared_distance(Var a, Var b);
// Rows of x picked by index, in the given order.
Var gather_rows(Var x, const std::vector<std::size_t>& rows);
// Weighted sum of a vector: sum_i w_i v_i -> scalar.
Var weighted_sum(Var v, const std::vector<double>& weights);

}  // namespace ird::num
