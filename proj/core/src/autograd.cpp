#include "dv365/autograd.hpp"

#include <cmath>

namespace dv365 {

Tape::Id Tape::constant(Mat v) {
  return push(std::move(v));
}

Tape::Id Tape::param(Param& p) {
  Id id = push(p.value);
  Param* pp = &p;
  set_back(id, [this, id, pp] {
    Mat& go = g(id);
    for (size_t i = 0; i < go.size(); ++i) pp->grad.a[i] += go.a[i];
  });
  return id;
}

Tape::Id Tape::add(Id a, Id b) {
  DV365_CHECK(nodes_[a].val.same_shape(nodes_[b].val), "add shape mismatch");
  Mat out = nodes_[a].val;
  const Mat& vb = nodes_[b].val;
  for (size_t i = 0; i < out.size(); ++i) out.a[i] += vb.a[i];
  Id id = push(std::move(out));
  set_back(id, [this, id, a, b] {
    const Mat& go = g(id);
    Mat& ga = g(a);
    Mat& gb = g(b);
    for (size_t i = 0; i < go.size(); ++i) {
      ga.a[i] += go.a[i];
      gb.a[i] += go.a[i];
    }
  });
  return id;
}

Tape::Id Tape::sub(Id a, Id b) {
  DV365_CHECK(nodes_[a].val.same_shape(nodes_[b].val), "sub shape mismatch");
  Mat out = nodes_[a].val;
  const Mat& vb = nodes_[b].val;
  for (size_t i = 0; i < out.size(); ++i) out.a[i] -= vb.a[i];
  Id id = push(std::move(out));
  set_back(id, [this, id, a, b] {
    const Mat& go = g(id);
    Mat& ga = g(a);
    Mat& gb = g(b);
    for (size_t i = 0; i < go.size(); ++i) {
      ga.a[i] += go.a[i];
      gb.a[i] -= go.a[i];
    }
  });
  return id;
}

Tape::Id Tape::scale(Id a, double s) {
  Mat out = nodes_[a].val;
  for (double& v : out.a) v *= s;
  Id id = push(std::move(out));
  set_back(id, [this, id, a, s] {
    const Mat& go = g(id);
    Mat& ga = g(a);
    for (size_t i = 0; i < go.size(); ++i) ga.a[i] += s * go.a[i];
  });
  return id;
}

Tape::Id Tape::hadamard(Id a, Id b) {
  DV365_CHECK(nodes_[a].val.same_shape(nodes_[b].val), "hadamard shape mismatch");
  Mat out = nodes_[a].val;
  const Mat& vb = nodes_[b].val;
  for (size_t i = 0; i < out.size(); ++i) out.a[i] *= vb.a[i];
  Id id = push(std::move(out));
  set_back(id, [this, id, a, b] {
    const Mat& go = g(id);
    const Mat& va = nodes_[a].val;
    const Mat& vb2 = nodes_[b].val;
    Mat& ga = g(a);
    Mat& gb = g(b);
    for (size_t i = 0; i < go.size(); ++i) {
      ga.a[i] += go.a[i] * vb2.a[i];
      gb.a[i] += go.a[i] * va.a[i];
    }
  });
  return id;
}

Tape::Id Tape::matmul(Id a, Id b) {
  Id id = push(dv365::matmul(nodes_[a].val, nodes_[b].val));
  set_back(id, [this, id, a, b] {
    const Mat& go = g(id);        // [m, n]
    const Mat& va = nodes_[a].val;  // [m, k]
    const Mat& vb = nodes_[b].val;  // [k, n]
    Mat& ga = g(a);
    Mat& gb = g(b);
    // dA += dOut * B^T ; dB += A^T * dOut
    for (int i = 0; i < va.rows; ++i)
      for (int k = 0; k < va.cols; ++k) {
        double s = 0;
        const double* gr = go.row(i);
        const double* br = vb.row(k);
        for (int j = 0; j < vb.cols; ++j) s += gr[j] * br[j];
        ga.at(i, k) += s;
      }
    for (int k = 0; k < vb.rows; ++k)
      for (int i = 0; i < va.rows; ++i) {
        const double v = va.at(i, k);
        if (v == 0.0) continue;
        const double* gr = go.row(i);
        double* gbr = gb.row(k);
        for (int j = 0; j < vb.cols; ++j) gbr[j] += v * gr[j];
      }
  });
  return id;
}

Tape::Id Tape::transpose(Id a) {
  Id id = push(dv365::transpose(nodes_[a].val));
  set_back(id, [this, id, a] {
    const Mat& go = g(id);
    Mat& ga = g(a);
    for (int i = 0; i < go.rows; ++i)
      for (int j = 0; j < go.cols; ++j) ga.at(j, i) += go.at(i, j);
  });
  return id;
}

Tape::Id Tape::relu(Id a) {
  Mat out = nodes_[a].val;
  for (double& v : out.a) v = v > 0 ? v : 0.0;
  Id id = push(std::move(out));
  set_back(id, [this, id, a] {
    const Mat& go = g(id);
    const Mat& va = nodes_[a].val;
    Mat& ga = g(a);
    for (size_t i = 0; i < go.size(); ++i)
      if (va.a[i] > 0) ga.a[i] += go.a[i];
  });
  return id;
}

Tape::Id Tape::sigmoid(Id a) {
  Mat out = nodes_[a].val;
  for (double& v : out.a) v = 1.0 / (1.0 + std::exp(-v));
  Id id = push(std::move(out));
  set_back(id, [this, id, a] {
    const Mat& go = g(id);
    const Mat& vo = nodes_[id].val;
    Mat& ga = g(a);
    for (size_t i = 0; i < go.size(); ++i)
      ga.a[i] += go.a[i] * vo.a[i] * (1.0 - vo.a[i]);
  });
  return id;
}

Tape::Id Tape::exp(Id a) {
  Mat out = nodes_[a].val;
  for (double& v : out.a) v = std::exp(v);
  Id id = push(std::move(out));
  set_back(id, [this, id, a] {
    const Mat& go = g(id);
    const Mat& vo = nodes_[id].val;
    Mat& ga = g(a);
    for (size_t i = 0; i < go.size(); ++i) ga.a[i] += go.a[i] * vo.a[i];
  });
  return id;
}

Tape::Id Tape::reshape(Id a, int rows, int cols) {
  const Mat& va = nodes_[a].val;
  DV365_CHECK(static_cast<size_t>(rows) * cols == va.size(), "reshape size mismatch");
  Mat out(rows, cols);
  out.a = va.a;
  Id id = push(std::move(out));
  set_back(id, [this, id, a] {
    const Mat& go = g(id);
    Mat& ga = g(a);
    for (size_t i = 0; i < go.size(); ++i) ga.a[i] += go.a[i];
  });
  return id;
}

Tape::Id Tape::add_row_broadcast(Id m, Id rowvec) {
  const Mat& vm = nodes_[m].val;
  const Mat& vr = nodes_[rowvec].val;
  DV365_CHECK(vr.rows == 1 && vr.cols == vm.cols, "broadcast shape mismatch");
  Mat out = vm;
  for (int i = 0; i < out.rows; ++i) {
    double* r = out.row(i);
    for (int j = 0; j < out.cols; ++j) r[j] += vr.at(0, j);
  }
  Id id = push(std::move(out));
  set_back(id, [this, id, m, rowvec] {
    const Mat& go = g(id);
    Mat& gm = g(m);
    Mat& gr = g(rowvec);
    for (int i = 0; i < go.rows; ++i)
      for (int j = 0; j < go.cols; ++j) {
        gm.at(i, j) += go.at(i, j);
        gr.at(0, j) += go.at(i, j);
      }
  });
  return id;
}

Tape::Id Tape::concat_rows(const std::vector<Id>& parts) {
  DV365_CHECK(!parts.empty(), "concat_rows: empty");
  int cols = nodes_[parts[0]].val.cols;
  int rows = 0;
  for (Id p : parts) {
    DV365_CHECK(nodes_[p].val.cols == cols, "concat_rows col mismatch");
    rows += nodes_[p].val.rows;
  }
  Mat out(rows, cols);
  int r0 = 0;
  for (Id p : parts) {
    const Mat& v = nodes_[p].val;
    for (int i = 0; i < v.rows; ++i)
      for (int j = 0; j < cols; ++j) out.at(r0 + i, j) = v.at(i, j);
    r0 += v.rows;
  }
  Id id = push(std::move(out));
  std::vector<Id> ps = parts;
  set_back(id, [this, id, ps] {
    const Mat& go = g(id);
    int r = 0;
    for (Id p : ps) {
      Mat& gp = g(p);
      for (int i = 0; i < gp.rows; ++i)
        for (int j = 0; j < gp.cols; ++j) gp.at(i, j) += go.at(r + i, j);
      r += gp.rows;
    }
  });
  return id;
}

Tape::Id Tape::concat_cols(const std::vector<Id>& parts) {
  DV365_CHECK(!parts.empty(), "concat_cols: empty");
  int rows = nodes_[parts[0]].val.rows;
  int cols = 0;
  for (Id p : parts) {
    DV365_CHECK(nodes_[p].val.rows == rows, "concat_cols row mismatch");
    cols += nodes_[p].val.cols;
  }
  Mat out(rows, cols);
  int c0 = 0;
  for (Id p : parts) {
    const Mat& v = nodes_[p].val;
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < v.cols; ++j) out.at(i, c0 + j) = v.at(i, j);
    c0 += v.cols;
  }
  Id id = push(std::move(out));
  std::vector<Id> ps = parts;
  set_back(id, [this, id, ps] {
    const Mat& go = g(id);
    int c = 0;
    for (Id p : ps) {
      Mat& gp = g(p);
      for (int i = 0; i < gp.rows; ++i)
        for (int j = 0; j < gp.cols; ++j) gp.at(i, j) += go.at(i, c + j);
      c += gp.cols;
    }
  });
  return id;
}

Tape::Id Tape::slice_rows(Id a, int from, int count) {
  const Mat& va = nodes_[a].val;
  DV365_CHECK(from >= 0 && from + count <= va.rows, "slice_rows out of range");
  Mat out(count, va.cols);
  for (int i = 0; i < count; ++i)
    for (int j = 0; j < va.cols; ++j) out.at(i, j) = va.at(from + i, j);
  Id id = push(std::move(out));
  set_back(id, [this, id, a, from] {
    const Mat& go = g(id);
    Mat& ga = g(a);
    for (int i = 0; i < go.rows; ++i)
      for (int j = 0; j < go.cols; ++j) ga.at(from + i, j) += go.at(i, j);
  });
  return id;
}

Tape::Id Tape::slice_cols(Id a, int from, int count) {
  const Mat& va = nodes_[a].val;
  DV365_CHECK(from >= 0 && from + count <= va.cols, "slice_cols out of range");
  Mat out(va.rows, count);
  for (int i = 0; i < va.rows; ++i)
    for (int j = 0; j < count; ++j) out.at(i, j) = va.at(i, from + j);
  Id id = push(std::move(out));
  set_back(id, [this, id, a, from] {
    const Mat& go = g(id);
    Mat& ga = g(a);
    for (int i = 0; i < go.rows; ++i)
      for (int j = 0; j < go.cols; ++j) ga.at(i, from + j) += go.at(i, j);
  });
  return id;
}

Tape::Id Tape::softmax_rows(Id a) {
  Mat out = nodes_[a].val;
  for (int i = 0; i < out.rows; ++i) {
    double* r = out.row(i);
    double mx = r[0];
    for (int j = 1; j < out.cols; ++j) mx = std::max(mx, r[j]);
    double sum = 0;
    for (int j = 0; j < out.cols; ++j) {
      r[j] = std::exp(r[j] - mx);
      sum += r[j];
    }
    for (int j = 0; j < out.cols; ++j) r[j] /= sum;
  }
  Id id = push(std::move(out));
  set_back(id, [this, id, a] {
    const Mat& go = g(id);
    const Mat& y = nodes_[id].val;
    Mat& ga = g(a);
    for (int i = 0; i < y.rows; ++i) {
      double dy_dot_y = 0;
      for (int j = 0; j < y.cols; ++j) dy_dot_y += go.at(i, j) * y.at(i, j);
      for (int j = 0; j < y.cols; ++j)
        ga.at(i, j) += y.at(i, j) * (go.at(i, j) - dy_dot_y);
    }
  });
  return id;
}

Tape::Id Tape::layer_norm_rows(Id x, Id gain, Id bias, double eps) {
  const Mat& vx = nodes_[x].val;
  const Mat& vg = nodes_[gain].val;
  const Mat& vb = nodes_[bias].val;
  DV365_CHECK(vg.rows == 1 && vg.cols == vx.cols, "layer_norm gain shape");
  DV365_CHECK(vb.rows == 1 && vb.cols == vx.cols, "layer_norm bias shape");
  const int C = vx.cols;
  Mat out(vx.rows, C);
  Mat xhat(vx.rows, C);
  std::vector<double> inv_std(vx.rows);
  for (int i = 0; i < vx.rows; ++i) {
    const double* r = vx.row(i);
    double mu = 0;
    for (int j = 0; j < C; ++j) mu += r[j];
    mu /= C;
    double var = 0;
    for (int j = 0; j < C; ++j) var += (r[j] - mu) * (r[j] - mu);
    var /= C;
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[i] = is;
    for (int j = 0; j < C; ++j) {
      xhat.at(i, j) = (r[j] - mu) * is;
      out.at(i, j) = xhat.at(i, j) * vg.at(0, j) + vb.at(0, j);
    }
  }
  Id id = push(std::move(out));
  set_back(id, [this, id, x, gain, bias, xhat = std::move(xhat),
                inv_std = std::move(inv_std)] {
    const Mat& go = g(id);
    const Mat& vg2 = nodes_[gain].val;
    Mat& gx = g(x);
    Mat& gg = g(gain);
    Mat& gb = g(bias);
    const int C = go.cols;
    for (int i = 0; i < go.rows; ++i) {
      double sum_dxhat = 0, sum_dxhat_xhat = 0;
      for (int j = 0; j < C; ++j) {
        const double dxhat = go.at(i, j) * vg2.at(0, j);
        sum_dxhat += dxhat;
        sum_dxhat_xhat += dxhat * xhat.at(i, j);
        gg.at(0, j) += go.at(i, j) * xhat.at(i, j);
        gb.at(0, j) += go.at(i, j);
      }
      for (int j = 0; j < C; ++j) {
        const double dxhat = go.at(i, j) * vg2.at(0, j);
        gx.at(i, j) += inv_std[i] *
                       (dxhat - sum_dxhat / C - xhat.at(i, j) * sum_dxhat_xhat / C);
      }
    }
  });
  return id;
}

Tape::Id Tape::mean_pool_cols(Id a, int stride) {
  const Mat& va = nodes_[a].val;
  DV365_CHECK(stride >= 2, "mean_pool_cols: stride must be >= 2");
  const int n_out = (va.cols + stride - 1) / stride;
  Mat out(va.rows, n_out);
  for (int w = 0; w < n_out; ++w) {
    const int from = w * stride;
    const int width = std::min(stride, va.cols - from);
    for (int i = 0; i < va.rows; ++i) {
      double s = 0;
      for (int j = 0; j < width; ++j) s += va.at(i, from + j);
      out.at(i, w) = s / width;
    }
  }
  Id id = push(std::move(out));
  set_back(id, [this, id, a, stride] {
    const Mat& go = g(id);
    Mat& ga = g(a);
    for (int w = 0; w < go.cols; ++w) {
      const int from = w * stride;
      const int width = std::min(stride, ga.cols - from);
      for (int i = 0; i < go.rows; ++i) {
        const double gv = go.at(i, w) / width;
        for (int j = 0; j < width; ++j) ga.at(i, from + j) += gv;
      }
    }
  });
  return id;
}

Tape::Id Tape::gather_rows(Param& table, std::vector<int> rows) {
  const int D = table.value.cols;
  Mat out(static_cast<int>(rows.size()), D);
  for (size_t i = 0; i < rows.size(); ++i) {
    DV365_CHECK(rows[i] >= 0 && rows[i] < table.value.rows, "gather row out of range");
    const double* src = table.value.row(rows[i]);
    double* dst = out.row(static_cast<int>(i));
    for (int j = 0; j < D; ++j) dst[j] = src[j];
  }
  Id id = push(std::move(out));
  Param* tp = &table;
  set_back(id, [this, id, tp, rows = std::move(rows)] {
    const Mat& go = g(id);
    for (size_t i = 0; i < rows.size(); ++i) {
      double* dst = tp->grad.row(rows[i]);
      const double* src = go.row(static_cast<int>(i));
      for (int j = 0; j < go.cols; ++j) dst[j] += src[j];
    }
  });
  return id;
}

Tape::Id Tape::mean_rows(Id a) {
  const Mat& va = nodes_[a].val;
  DV365_CHECK(va.rows > 0, "mean_rows: empty");
  Mat out(1, va.cols);
  for (int i = 0; i < va.rows; ++i)
    for (int j = 0; j < va.cols; ++j) out.at(0, j) += va.at(i, j);
  for (int j = 0; j < va.cols; ++j) out.at(0, j) /= va.rows;
  Id id = push(std::move(out));
  set_back(id, [this, id, a] {
    const Mat& go = g(id);
    Mat& ga = g(a);
    for (int i = 0; i < ga.rows; ++i)
      for (int j = 0; j < ga.cols; ++j) ga.at(i, j) += go.at(0, j) / ga.rows;
  });
  return id;
}

Tape::Id Tape::weighted_mean_rows(Id a, Id w) {
  const Mat& va = nodes_[a].val;
  const Mat& vw = nodes_[w].val;
  DV365_CHECK(vw.rows == 1 && vw.cols == va.rows, "weighted_mean_rows shape");
  double wsum = 0;
  for (int i = 0; i < va.rows; ++i) wsum += vw.at(0, i);
  DV365_CHECK(wsum > 0, "weighted_mean_rows: nonpositive weight sum");
  Mat out(1, va.cols);
  for (int i = 0; i < va.rows; ++i)
    for (int j = 0; j < va.cols; ++j) out.at(0, j) += vw.at(0, i) * va.at(i, j);
  for (int j = 0; j < va.cols; ++j) out.at(0, j) /= wsum;
  Id id = push(std::move(out));
  set_back(id, [this, id, a, w, wsum] {
    const Mat& go = g(id);
    const Mat& va2 = nodes_[a].val;
    const Mat& vw2 = nodes_[w].val;
    const Mat& vo = nodes_[id].val;
    Mat& ga = g(a);
    Mat& gw = g(w);
    for (int i = 0; i < va2.rows; ++i) {
      double s = 0;
      for (int j = 0; j < va2.cols; ++j) {
        ga.at(i, j) += go.at(0, j) * vw2.at(0, i) / wsum;
        s += go.at(0, j) * (va2.at(i, j) - vo.at(0, j));
      }
      gw.at(0, i) += s / wsum;
    }
  });
  return id;
}

Tape::Id Tape::upper_triangle_offdiag(Id gmat) {
  const Mat& vg = nodes_[gmat].val;
  DV365_CHECK(vg.rows == vg.cols, "upper_triangle: square input required");
  const int F = vg.rows;
  Mat out(1, F * (F - 1) / 2);
  int k = 0;
  for (int i = 0; i < F; ++i)
    for (int j = i + 1; j < F; ++j) out.at(0, k++) = vg.at(i, j);
  Id id = push(std::move(out));
  set_back(id, [this, id, gmat, F] {
    const Mat& go = g(id);
    Mat& gg = g(gmat);
    int k2 = 0;
    for (int i = 0; i < F; ++i)
      for (int j = i + 1; j < F; ++j) gg.at(i, j) += go.at(0, k2++);
  });
  return id;
}

Tape::Id Tape::sum_all(Id a) {
  const Mat& va = nodes_[a].val;
  Mat out(1, 1);
  for (double v : va.a) out.at(0, 0) += v;
  Id id = push(std::move(out));
  set_back(id, [this, id, a] {
    const double go = g(id).at(0, 0);
    Mat& ga = g(a);
    for (double& v : ga.a) v += go;
  });
  return id;
}

Tape::Id Tape::bce_mean(Id pred_probs, Mat labels, double clamp_eps) {
  const Mat& p = nodes_[pred_probs].val;
  DV365_CHECK(p.same_shape(labels), "bce shape mismatch");
  const int B = static_cast<int>(p.size());
  DV365_CHECK(B > 0, "bce: empty batch");
  Mat clamped = p;
  for (double& v : clamped.a)
    v = std::min(std::max(v, clamp_eps), 1.0 - clamp_eps);
  Mat out(1, 1);
  double loss = 0;
  for (int i = 0; i < B; ++i) {
    const double y = labels.a[i];
    loss -= y * std::log(clamped.a[i]) + (1.0 - y) * std::log(1.0 - clamped.a[i]);
  }
  out.at(0, 0) = loss / B;
  Id id = push(std::move(out));
  set_back(id, [this, id, pred_probs, labels = std::move(labels),
                clamped = std::move(clamped), clamp_eps, B] {
    const double go = g(id).at(0, 0);
    const Mat& p2 = nodes_[pred_probs].val;
    Mat& gp = g(pred_probs);
    for (int i = 0; i < B; ++i) {
      // Gradient passes only where the clamp was inactive.
      if (p2.a[i] <= clamp_eps || p2.a[i] >= 1.0 - clamp_eps) continue;
      const double y = labels.a[i];
      gp.a[i] += go * (-(y / clamped.a[i]) + (1.0 - y) / (1.0 - clamped.a[i])) / B;
    }
  });
  return id;
}

Tape::Id Tape::mse_mean(Id pred, Mat target) {
  const Mat& p = nodes_[pred].val;
  DV365_CHECK(p.same_shape(target), "mse shape mismatch");
  const int B = static_cast<int>(p.size());
  DV365_CHECK(B > 0, "mse: empty batch");
  Mat out(1, 1);
  double loss = 0;
  for (int i = 0; i < B; ++i) {
    const double d = target.a[i] - p.a[i];
    loss += d * d;
  }
  out.at(0, 0) = loss / B;
  Id id = push(std::move(out));
  set_back(id, [this, id, pred, target = std::move(target), B] {
    const double go = g(id).at(0, 0);
    const Mat& p2 = nodes_[pred].val;
    Mat& gp = g(pred);
    for (int i = 0; i < B; ++i)
      gp.a[i] += go * 2.0 * (p2.a[i] - target.a[i]) / B;
  });
  return id;
}

void Tape::backward(Id loss) {
  DV365_CHECK(recording_, "backward on a non-recording tape");
  DV365_CHECK(!ran_backward_, "backward ran twice on one tape");
  const Mat& lv = nodes_[loss].val;
  DV365_CHECK(lv.rows == 1 && lv.cols == 1, "backward: loss must be scalar");
  ran_backward_ = true;
  nodes_[loss].grad.at(0, 0) = 1.0;
  for (Id id = static_cast<Id>(nodes_.size()) - 1; id >= 0; --id)
    if (nodes_[id].back) nodes_[id].back();
}

}  // namespace dv365
