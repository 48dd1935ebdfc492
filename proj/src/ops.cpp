#include "naenc/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "naenc/errors.hpp"

namespace naenc::ops {

namespace {

constexpr real kNegInf = -std::numeric_limits<real>::infinity();

VarPtr make_node(Tensor value, std::vector<VarPtr> parents, std::function<void(Var&)> backward_fn) {
    auto node = std::make_shared<Var>();
    node->value = std::move(value);
    for (const VarPtr& p : parents) {
        if (p && p->requires_grad) {
            node->requires_grad = true;
            break;
        }
    }
    node->parents = std::move(parents);
    if (node->requires_grad) {
        node->backward_fn = std::move(backward_fn);
    }
    return node;
}

void require_rank2(const Tensor& t, const char* op_name) {
    if (t.rank() != 2) {
        throw ShapeError(std::string(op_name) + ": expected a rank-2 tensor, got " + t.shape_string());
    }
}

} // namespace

// ---------------------------------------------------------------- matmul

Tensor matmul_value(const Tensor& a, const Tensor& b) {
    require_rank2(a, "matmul");
    require_rank2(b, "matmul");
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    if (b.rows() != k) {
        throw ShapeError("matmul: inner dimensions disagree, " + a.shape_string() + " x " + b.shape_string());
    }
    Tensor out({m, n});
    const real* av = a.data();
    const real* bv = b.data();
    real* ov = out.data();
    // i-k-j order keeps both streams contiguous.
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t kk = 0; kk < k; ++kk) {
            const real aik = av[i * k + kk];
            if (aik == real(0)) continue;
            const real* brow = bv + kk * n;
            real* orow = ov + i * n;
            for (std::size_t j = 0; j < n; ++j) {
                orow[j] += aik * brow[j];
            }
        }
    }
    return out;
}

Tensor matmul_nt_value(const Tensor& a, const Tensor& b) {
    require_rank2(a, "matmul_nt");
    require_rank2(b, "matmul_nt");
    const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
    if (b.cols() != k) {
        throw ShapeError("matmul_nt: inner dimensions disagree, " + a.shape_string() + " x " +
                         b.shape_string() + "^T");
    }
    Tensor out({m, n});
    const real* av = a.data();
    const real* bv = b.data();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const real* arow = av + i * k;
            const real* brow = bv + j * k;
            real acc = 0;
            for (std::size_t kk = 0; kk < k; ++kk) {
                acc += arow[kk] * brow[kk];
            }
            out.at(i, j) = acc;
        }
    }
    return out;
}

Tensor transpose_value(const Tensor& x) {
    require_rank2(x, "transpose");
    Tensor out({x.cols(), x.rows()});
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < x.cols(); ++j) {
            out.at(j, i) = x.at(i, j);
        }
    }
    return out;
}

VarPtr matmul(const VarPtr& a, const VarPtr& b) {
    Tensor value = matmul_value(a->value, b->value);
    return make_node(std::move(value), {a, b}, [a, b](Var& self) {
        const Tensor grad(self.value.shape(), self.value.grad());
        if (a->requires_grad) {
            Tensor da = matmul_nt_value(grad, b->value); // dC * B^T
            auto& slot = a->value.grad();
            for (std::size_t i = 0; i < slot.size(); ++i) slot[i] += da.at(i);
        }
        if (b->requires_grad) {
            Tensor db = matmul_value(transpose_value(a->value), grad); // A^T * dC
            auto& slot = b->value.grad();
            for (std::size_t i = 0; i < slot.size(); ++i) slot[i] += db.at(i);
        }
    });
}

VarPtr matmul_nt(const VarPtr& a, const VarPtr& b) {
    Tensor value = matmul_nt_value(a->value, b->value);
    return make_node(std::move(value), {a, b}, [a, b](Var& self) {
        const Tensor grad(self.value.shape(), self.value.grad());
        if (a->requires_grad) {
            Tensor da = matmul_value(grad, b->value); // dC * B
            auto& slot = a->value.grad();
            for (std::size_t i = 0; i < slot.size(); ++i) slot[i] += da.at(i);
        }
        if (b->requires_grad) {
            Tensor db = matmul_value(transpose_value(grad), a->value); // dC^T * A
            auto& slot = b->value.grad();
            for (std::size_t i = 0; i < slot.size(); ++i) slot[i] += db.at(i);
        }
    });
}

VarPtr transpose(const VarPtr& x) {
    Tensor value = transpose_value(x->value);
    return make_node(std::move(value), {x}, [x](Var& self) {
        const std::size_t rows = self.value.rows(), cols = self.value.cols();
        auto& slot = x->value.grad();
        const auto& g = self.value.grad();
        for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < cols; ++j) {
                slot[j * rows + i] += g[i * cols + j];
            }
        }
    });
}

// ---------------------------------------------------------------- elementwise

VarPtr add(const VarPtr& a, const VarPtr& b) {
    check_same_shape(a->value, b->value, "add");
    Tensor value = a->value;
    for (std::size_t i = 0; i < value.size(); ++i) value.at(i) += b->value.at(i);
    value.drop_grad();
    return make_node(std::move(value), {a, b}, [a, b](Var& self) {
        const auto& g = self.value.grad();
        if (a->requires_grad) {
            auto& slot = a->value.grad();
            for (std::size_t i = 0; i < g.size(); ++i) slot[i] += g[i];
        }
        if (b->requires_grad) {
            auto& slot = b->value.grad();
            for (std::size_t i = 0; i < g.size(); ++i) slot[i] += g[i];
        }
    });
}

VarPtr add_row_broadcast(const VarPtr& x, const VarPtr& row) {
    require_rank2(x->value, "add_row_broadcast");
    const std::size_t cols = x->value.cols();
    if (row->value.size() != cols) {
        throw ShapeError("add_row_broadcast: row " + row->value.shape_string() +
                         " does not match " + x->value.shape_string());
    }
    Tensor value = x->value;
    value.drop_grad();
    for (std::size_t i = 0; i < value.rows(); ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            value.at(i, j) += row->value.at(j);
        }
    }
    return make_node(std::move(value), {x, row}, [x, row, cols](Var& self) {
        const auto& g = self.value.grad();
        if (x->requires_grad) {
            auto& slot = x->value.grad();
            for (std::size_t i = 0; i < g.size(); ++i) slot[i] += g[i];
        }
        if (row->requires_grad) {
            auto& slot = row->value.grad();
            const std::size_t rows = self.value.rows();
            for (std::size_t i = 0; i < rows; ++i) {
                for (std::size_t j = 0; j < cols; ++j) {
                    slot[j] += g[i * cols + j];
                }
            }
        }
    });
}

VarPtr add_const(const VarPtr& x, const Tensor& c) {
    check_same_shape(x->value, c, "add_const");
    Tensor value = x->value;
    value.drop_grad();
    for (std::size_t i = 0; i < value.size(); ++i) value.at(i) += c.at(i);
    return make_node(std::move(value), {x}, [x](Var& self) {
        const auto& g = self.value.grad();
        auto& slot = x->value.grad();
        for (std::size_t i = 0; i < g.size(); ++i) slot[i] += g[i];
    });
}

VarPtr mul(const VarPtr& a, const VarPtr& b) {
    check_same_shape(a->value, b->value, "mul");
    Tensor value = a->value;
    value.drop_grad();
    for (std::size_t i = 0; i < value.size(); ++i) value.at(i) *= b->value.at(i);
    return make_node(std::move(value), {a, b}, [a, b](Var& self) {
        const auto& g = self.value.grad();
        if (a->requires_grad) {
            auto& slot = a->value.grad();
            for (std::size_t i = 0; i < g.size(); ++i) slot[i] += g[i] * b->value.at(i);
        }
        if (b->requires_grad) {
            auto& slot = b->value.grad();
            for (std::size_t i = 0; i < g.size(); ++i) slot[i] += g[i] * a->value.at(i);
        }
    });
}

VarPtr scale(const VarPtr& x, real factor) {
    Tensor value = x->value;
    value.drop_grad();
    for (std::size_t i = 0; i < value.size(); ++i) value.at(i) *= factor;
    return make_node(std::move(value), {x}, [x, factor](Var& self) {
        const auto& g = self.value.grad();
        auto& slot = x->value.grad();
        for (std::size_t i = 0; i < g.size(); ++i) slot[i] += g[i] * factor;
    });
}

// ---------------------------------------------------------------- softmax

Tensor softmax_rows_value(const Tensor& scores, const Tensor* additive_mask) {
    require_rank2(scores, "softmax_rows");
    if (additive_mask) {
        check_same_shape(scores, *additive_mask, "softmax_rows mask");
    }
    const std::size_t rows = scores.rows(), cols = scores.cols();
    Tensor out({rows, cols});
    for (std::size_t i = 0; i < rows; ++i) {
        real row_max = kNegInf;
        for (std::size_t j = 0; j < cols; ++j) {
            real s = scores.at(i, j);
            if (additive_mask) s += additive_mask->at(i, j);
            if (s > row_max) row_max = s;
        }
        if (row_max == kNegInf) {
            continue; // fully masked row stays all-zero
        }
        real denom = 0;
        for (std::size_t j = 0; j < cols; ++j) {
            real s = scores.at(i, j);
            if (additive_mask) s += additive_mask->at(i, j);
            const real e = (s == kNegInf) ? real(0) : std::exp(s - row_max);
            out.at(i, j) = e;
            denom += e;
        }
        const real inv = real(1) / denom;
        for (std::size_t j = 0; j < cols; ++j) {
            out.at(i, j) *= inv;
        }
    }
    return out;
}

VarPtr softmax_rows(const VarPtr& scores, const Tensor* additive_mask) {
    Tensor value = softmax_rows_value(scores->value, additive_mask);
    return make_node(std::move(value), {scores}, [scores](Var& self) {
        // dS = P .* (dP - rowsum(dP .* P)); zero rows stay zero.
        const std::size_t rows = self.value.rows(), cols = self.value.cols();
        const auto& g = self.value.grad();
        auto& slot = scores->value.grad();
        for (std::size_t i = 0; i < rows; ++i) {
            real dot = 0;
            for (std::size_t j = 0; j < cols; ++j) {
                dot += g[i * cols + j] * self.value.at(i, j);
            }
            for (std::size_t j = 0; j < cols; ++j) {
                slot[i * cols + j] += self.value.at(i, j) * (g[i * cols + j] - dot);
            }
        }
    });
}

// ---------------------------------------------------------------- layer norm

VarPtr layer_norm(const VarPtr& x, const VarPtr& gamma, const VarPtr& beta, real eps) {
    require_rank2(x->value, "layer_norm");
    const std::size_t rows = x->value.rows(), cols = x->value.cols();
    if (gamma->value.size() != cols || beta->value.size() != cols) {
        throw ShapeError("layer_norm: gamma/beta " + gamma->value.shape_string() + "/" +
                         beta->value.shape_string() + " do not match " + x->value.shape_string());
    }
    if (eps <= real(0)) {
        throw ConfigError("layer_norm: eps must be positive");
    }

    Tensor value({rows, cols});
    Tensor normalized({rows, cols});
    std::vector<real> inv_std(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        real mean = 0;
        for (std::size_t j = 0; j < cols; ++j) mean += x->value.at(i, j);
        mean /= real(cols);
        real var = 0;
        for (std::size_t j = 0; j < cols; ++j) {
            const real d = x->value.at(i, j) - mean;
            var += d * d;
        }
        var /= real(cols);
        const real inv = real(1) / std::sqrt(var + eps);
        inv_std[i] = inv;
        for (std::size_t j = 0; j < cols; ++j) {
            const real xhat = (x->value.at(i, j) - mean) * inv;
            normalized.at(i, j) = xhat;
            value.at(i, j) = gamma->value.at(j) * xhat + beta->value.at(j);
        }
    }

    return make_node(std::move(value), {x, gamma, beta},
                     [x, gamma, beta, normalized, inv_std, rows, cols](Var& self) {
        const auto& g = self.value.grad();
        for (std::size_t i = 0; i < rows; ++i) {
            if (gamma->requires_grad) {
                auto& gslot = gamma->value.grad();
                for (std::size_t j = 0; j < cols; ++j) {
                    gslot[j] += g[i * cols + j] * normalized.at(i, j);
                }
            }
            if (beta->requires_grad) {
                auto& bslot = beta->value.grad();
                for (std::size_t j = 0; j < cols; ++j) {
                    bslot[j] += g[i * cols + j];
                }
            }
            if (x->requires_grad) {
                // dx = (h - mean(h) - xhat * mean(h .* xhat)) * inv_std,
                // where h = gamma .* dout.
                real mean_h = 0, mean_hx = 0;
                for (std::size_t j = 0; j < cols; ++j) {
                    const real h = g[i * cols + j] * gamma->value.at(j);
                    mean_h += h;
                    mean_hx += h * normalized.at(i, j);
                }
                mean_h /= real(cols);
                mean_hx /= real(cols);
                auto& xslot = x->value.grad();
                for (std::size_t j = 0; j < cols; ++j) {
                    const real h = g[i * cols + j] * gamma->value.at(j);
                    xslot[i * cols + j] += (h - mean_h - normalized.at(i, j) * mean_hx) * inv_std[i];
                }
            }
        }
    });
}

// ---------------------------------------------------------------- gelu

real gelu_value(real x) {
    // exact Gaussian CDF form: x * Phi(x)
    return x * real(0.5) * (real(1) + std::erf(x * real(0.7071067811865475244)));
}

VarPtr gelu(const VarPtr& x) {
    Tensor value = x->value;
    value.drop_grad();
    for (std::size_t i = 0; i < value.size(); ++i) value.at(i) = gelu_value(value.at(i));
    return make_node(std::move(value), {x}, [x](Var& self) {
        const auto& g = self.value.grad();
        auto& slot = x->value.grad();
        for (std::size_t i = 0; i < g.size(); ++i) {
            const real v = x->value.at(i);
            const real cdf = real(0.5) * (real(1) + std::erf(v * real(0.7071067811865475244)));
            const real pdf = std::exp(real(-0.5) * v * v) * real(0.3989422804014326779);
            slot[i] += g[i] * (cdf + v * pdf);
        }
    });
}

// ---------------------------------------------------------------- gather / slice / concat

VarPtr embedding_rows(const VarPtr& table, const std::vector<std::size_t>& ids) {
    require_rank2(table->value, "embedding_rows");
    const std::size_t vocab = table->value.rows(), dim = table->value.cols();
    for (std::size_t id : ids) {
        if (id >= vocab) {
            throw IndexError("embedding_rows: id " + std::to_string(id) + " out of range for table of " +
                             std::to_string(vocab) + " rows");
        }
    }
    Tensor value({ids.size(), dim});
    for (std::size_t i = 0; i < ids.size(); ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
            value.at(i, j) = table->value.at(ids[i], j);
        }
    }
    return make_node(std::move(value), {table}, [table, ids, dim](Var& self) {
        auto& slot = table->value.grad();
        const auto& g = self.value.grad();
        for (std::size_t i = 0; i < ids.size(); ++i) {
            for (std::size_t j = 0; j < dim; ++j) {
                slot[ids[i] * dim + j] += g[i * dim + j];
            }
        }
    });
}

VarPtr slice_rows(const VarPtr& x, std::size_t begin, std::size_t count) {
    require_rank2(x->value, "slice_rows");
    const std::size_t rows = x->value.rows(), cols = x->value.cols();
    if (begin + count > rows) {
        throw IndexError("slice_rows: [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                         ") out of range for " + x->value.shape_string());
    }
    Tensor value({count, cols});
    for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            value.at(i, j) = x->value.at(begin + i, j);
        }
    }
    return make_node(std::move(value), {x}, [x, begin, count, cols](Var& self) {
        auto& slot = x->value.grad();
        const auto& g = self.value.grad();
        for (std::size_t i = 0; i < count; ++i) {
            for (std::size_t j = 0; j < cols; ++j) {
                slot[(begin + i) * cols + j] += g[i * cols + j];
            }
        }
    });
}

VarPtr slice_cols(const VarPtr& x, std::size_t begin, std::size_t count) {
    require_rank2(x->value, "slice_cols");
    const std::size_t rows = x->value.rows(), cols = x->value.cols();
    if (begin + count > cols) {
        throw IndexError("slice_cols: [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                         ") out of range for " + x->value.shape_string());
    }
    Tensor value({rows, count});
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < count; ++j) {
            value.at(i, j) = x->value.at(i, begin + j);
        }
    }
    return make_node(std::move(value), {x}, [x, begin, count, cols, rows](Var& self) {
        auto& slot = x->value.grad();
        const auto& g = self.value.grad();
        for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < count; ++j) {
                slot[i * cols + begin + j] += g[i * count + j];
            }
        }
    });
}

VarPtr concat_cols(const std::vector<VarPtr>& parts) {
    if (parts.empty()) {
        throw ShapeError("concat_cols: no parts");
    }
    const std::size_t rows = parts.front()->value.rows();
    std::size_t total_cols = 0;
    for (const VarPtr& p : parts) {
        require_rank2(p->value, "concat_cols");
        if (p->value.rows() != rows) {
            throw ShapeError("concat_cols: row counts differ");
        }
        total_cols += p->value.cols();
    }
    Tensor value({rows, total_cols});
    std::size_t col_offset = 0;
    for (const VarPtr& p : parts) {
        const std::size_t c = p->value.cols();
        for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
                value.at(i, col_offset + j) = p->value.at(i, j);
            }
        }
        col_offset += c;
    }
    std::vector<VarPtr> parents(parts.begin(), parts.end());
    return make_node(std::move(value), parents, [parts, rows, total_cols](Var& self) {
        const auto& g = self.value.grad();
        std::size_t col_offset = 0;
        for (const VarPtr& p : parts) {
            const std::size_t c = p->value.cols();
            if (p->requires_grad) {
                auto& slot = p->value.grad();
                for (std::size_t i = 0; i < rows; ++i) {
                    for (std::size_t j = 0; j < c; ++j) {
                        slot[i * c + j] += g[i * total_cols + col_offset + j];
                    }
                }
            }
            col_offset += c;
        }
    });
}

// ---------------------------------------------------------------- dropout

VarPtr dropout(const VarPtr& x, real rate, Rng& rng) {
    if (rate < real(0) || rate >= real(1)) {
        throw ConfigError("dropout rate must lie in [0, 1)");
    }
    if (rate == real(0)) {
        return x;
    }
    const real keep = real(1) - rate;
    const real inv_keep = real(1) / keep;
    auto mask = std::make_shared<std::vector<real>>(x->value.size());
    Tensor value = x->value;
    value.drop_grad();
    for (std::size_t i = 0; i < value.size(); ++i) {
        const real m = rng.uniform_real() < keep ? inv_keep : real(0);
        (*mask)[i] = m;
        value.at(i) *= m;
    }
    return make_node(std::move(value), {x}, [x, mask](Var& self) {
        const auto& g = self.value.grad();
        auto& slot = x->value.grad();
        for (std::size_t i = 0; i < g.size(); ++i) slot[i] += g[i] * (*mask)[i];
    });
}

// ---------------------------------------------------------------- cross entropy

VarPtr cross_entropy_masked(const VarPtr& logits,
                            const std::vector<std::int64_t>& targets,
                            const std::vector<std::size_t>& predict_positions) {
    require_rank2(logits->value, "cross_entropy_masked");
    const std::size_t rows = logits->value.rows(), vocab = logits->value.cols();
    for (std::size_t pos : predict_positions) {
        if (pos >= rows) {
            throw IndexError("cross_entropy_masked: predict position " + std::to_string(pos) +
                             " outside sequence of length " + std::to_string(rows));
        }
        if (pos >= targets.size() || targets[pos] < 0) {
            throw IndexError("cross_entropy_masked: no target at predict position " + std::to_string(pos));
        }
        if (static_cast<std::size_t>(targets[pos]) >= vocab) {
            throw IndexError("cross_entropy_masked: target id " + std::to_string(targets[pos]) +
                             " >= vocabulary size " + std::to_string(vocab));
        }
    }

    real loss = 0;
    for (std::size_t pos : predict_positions) {
        real row_max = kNegInf;
        for (std::size_t j = 0; j < vocab; ++j) {
            row_max = std::max(row_max, logits->value.at(pos, j));
        }
        real denom = 0;
        for (std::size_t j = 0; j < vocab; ++j) {
            const real s = logits->value.at(pos, j);
            denom += (s == kNegInf) ? real(0) : std::exp(s - row_max);
        }
        const real lse = row_max + std::log(denom);
        loss += lse - logits->value.at(pos, static_cast<std::size_t>(targets[pos]));
    }
    if (!predict_positions.empty()) {
        loss /= real(predict_positions.size());
    }

    Tensor value = Tensor::scalar(loss);
    return make_node(std::move(value), {logits}, [logits, targets, predict_positions, vocab](Var& self) {
        if (predict_positions.empty()) return;
        const real upstream = self.value.grad()[0] / real(predict_positions.size());
        auto& slot = logits->value.grad();
        for (std::size_t pos : predict_positions) {
            real row_max = kNegInf;
            for (std::size_t j = 0; j < vocab; ++j) {
                row_max = std::max(row_max, logits->value.at(pos, j));
            }
            real denom = 0;
            for (std::size_t j = 0; j < vocab; ++j) {
                const real s = logits->value.at(pos, j);
                denom += (s == kNegInf) ? real(0) : std::exp(s - row_max);
            }
            for (std::size_t j = 0; j < vocab; ++j) {
                const real s = logits->value.at(pos, j);
                const real p = (s == kNegInf) ? real(0) : std::exp(s - row_max) / denom;
                const real indicator = (j == static_cast<std::size_t>(targets[pos])) ? real(1) : real(0);
                slot[pos * vocab + j] += upstream * (p - indicator);
            }
        }
    });
}

VarPtr mean_of(const std::vector<VarPtr>& scalars) {
    if (scalars.empty()) {
        throw ShapeError("mean_of: no terms");
    }
    real total = 0;
    for (const VarPtr& s : scalars) {
        if (s->value.size() != 1) {
            throw ShapeError("mean_of: term is not a scalar");
        }
        total += s->value.at(0);
    }
    const real inv_n = real(1) / real(scalars.size());
    Tensor value = Tensor::scalar(total * inv_n);
    std::vector<VarPtr> parents(scalars.begin(), scalars.end());
    return make_node(std::move(value), parents, [scalars, inv_n](Var& self) {
        const real g = self.value.grad()[0] * inv_n;
        for (const VarPtr& s : scalars) {
            if (s->requires_grad) s->value.grad()[0] += g;
        }
    });
}

VarPtr sum_all(const VarPtr& x) {
    real total = 0;
    for (std::size_t i = 0; i < x->value.size(); ++i) total += x->value.at(i);
    return make_node(Tensor::scalar(total), {x}, [x](Var& self) {
        const real g = self.value.grad()[0];
        auto& slot = x->value.grad();
        for (real& s : slot) s += g;
    });
}

// ---------------------------------------------------------------- relative position terms

namespace {

std::size_t clipped_distance_index(std::size_t i, std::size_t j, std::size_t max_distance) {
    const std::int64_t delta = static_cast<std::int64_t>(j) - static_cast<std::int64_t>(i);
    const std::int64_t k = static_cast<std::int64_t>(max_distance);
    const std::int64_t clipped = std::clamp(delta, -k, k);
    return static_cast<std::size_t>(clipped + k);
}

void check_relative_table(const Tensor& table, std::size_t max_distance, std::size_t dim) {
    const std::size_t wanted = 2 * max_distance + 1;
    if (table.rank() != 2 || table.rows() != wanted || table.cols() != dim) {
        throw ConfigError("relative distance table " + table.shape_string() + " does not cover +/-" +
                          std::to_string(max_distance) + " at width " + std::to_string(dim) +
                          " (need [" + std::to_string(wanted) + "x" + std::to_string(dim) + "])");
    }
}

} // namespace

VarPtr relative_scores(const VarPtr& q_head, const VarPtr& table, std::size_t max_distance) {
    require_rank2(q_head->value, "relative_scores");
    const std::size_t len = q_head->value.rows(), dim = q_head->value.cols();
    check_relative_table(table->value, max_distance, dim);
    Tensor value({len, len});
    for (std::size_t i = 0; i < len; ++i) {
        for (std::size_t j = 0; j < len; ++j) {
            const std::size_t idx = clipped_distance_index(i, j, max_distance);
            real acc = 0;
            for (std::size_t c = 0; c < dim; ++c) {
                acc += q_head->value.at(i, c) * table->value.at(idx, c);
            }
            value.at(i, j) = acc;
        }
    }
    return make_node(std::move(value), {q_head, table}, [q_head, table, max_distance, len, dim](Var& self) {
        const auto& g = self.value.grad();
        for (std::size_t i = 0; i < len; ++i) {
            for (std::size_t j = 0; j < len; ++j) {
                const real gij = g[i * len + j];
                if (gij == real(0)) continue;
                const std::size_t idx = clipped_distance_index(i, j, max_distance);
                if (q_head->requires_grad) {
                    auto& qslot = q_head->value.grad();
                    for (std::size_t c = 0; c < dim; ++c) {
                        qslot[i * dim + c] += gij * table->value.at(idx, c);
                    }
                }
                if (table->requires_grad) {
                    auto& tslot = table->value.grad();
                    for (std::size_t c = 0; c < dim; ++c) {
                        tslot[idx * dim + c] += gij * q_head->value.at(i, c);
                    }
                }
            }
        }
    });
}

VarPtr relative_context(const VarPtr& probs, const VarPtr& table, std::size_t max_distance) {
    require_rank2(probs->value, "relative_context");
    const std::size_t len = probs->value.rows();
    if (probs->value.cols() != len) {
        throw ShapeError("relative_context: probability matrix must be square, got " +
                         probs->value.shape_string());
    }
    const std::size_t dim = table->value.rank() == 2 ? table->value.cols() : 0;
    check_relative_table(table->value, max_distance, dim);
    Tensor value({len, dim});
    for (std::size_t i = 0; i < len; ++i) {
        for (std::size_t j = 0; j < len; ++j) {
            const real p = probs->value.at(i, j);
            if (p == real(0)) continue;
            const std::size_t idx = clipped_distance_index(i, j, max_distance);
            for (std::size_t c = 0; c < dim; ++c) {
                value.at(i, c) += p * table->value.at(idx, c);
            }
        }
    }
    return make_node(std::move(value), {probs, table}, [probs, table, max_distance, len, dim](Var& self) {
        const auto& g = self.value.grad();
        for (std::size_t i = 0; i < len; ++i) {
            for (std::size_t j = 0; j < len; ++j) {
                const std::size_t idx = clipped_distance_index(i, j, max_distance);
                if (probs->requires_grad) {
                    real acc = 0;
                    for (std::size_t c = 0; c < dim; ++c) {
                        acc += g[i * dim + c] * table->value.at(idx, c);
                    }
                    probs->value.grad()[i * len + j] += acc;
                }
                if (table->requires_grad) {
                    const real p = probs->value.at(i, j);
                    if (p == real(0)) continue;
                    auto& tslot = table->value.grad();
                    for (std::size_t c = 0; c < dim; ++c) {
                        tslot[idx * dim + c] += g[i * dim + c] * p;
                    }
                }
            }
        }
    });
}

} // namespace naenc::ops
