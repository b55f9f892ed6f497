#pragma once
// Reverse-mode tape over Mat. One tape per forward pass; ops record backward
// closures in creation order and backward() replays them in reverse.
//
// Parameters live outside the tape (struct Param) so the same storage is
// updated across steps; table lookups gather rows without copying the table.

#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "dv365/mat.hpp"

namespace dv365 {

struct Param {
  std::string name;
  Mat value;
  Mat grad;

  Param() = default;
  Param(std::string n, Mat v) : name(std::move(n)), value(std::move(v)) {
    grad = Mat(value.rows, value.cols);
  }
  void zero_grad() { grad.zero(); }
  size_t size() const { return value.size(); }
};

class Tape {
 public:
  using Id = int;

  // recording=false computes values only (export / eval path).
  explicit Tape(bool recording = true) : recording_(recording) {}

  Id constant(Mat v);
  Id param(Param& p);

  Id add(Id a, Id b);
  Id sub(Id a, Id b);
  Id scale(Id a, double s);
  Id hadamard(Id a, Id b);
  Id matmul(Id a, Id b);
  Id transpose(Id a);
  Id relu(Id a);
  Id sigmoid(Id a);
  Id exp(Id a);
  Id reshape(Id a, int rows, int cols);
  Id add_row_broadcast(Id m, Id rowvec);
  Id concat_rows(const std::vector<Id>& parts);
  Id concat_cols(const std::vector<Id>& parts);
  Id slice_rows(Id a, int from, int count);
  Id slice_cols(Id a, int from, int count);
  Id softmax_rows(Id a);
  Id layer_norm_rows(Id x, Id gain, Id bias, double eps = 1e-5);
  Id mean_pool_cols(Id a, int stride);
  Id gather_rows(Param& table, std::vector<int> rows);
  Id mean_rows(Id a);
  Id weighted_mean_rows(Id a, Id w);
  Id upper_triangle_offdiag(Id g);
  Id sum_all(Id a);

  // Losses. Labels/targets are data, not differentiated.
  Id bce_mean(Id pred_probs, Mat labels, double clamp_eps = 1e-7);
  Id mse_mean(Id pred, Mat target);

  const Mat& val(Id id) const { return nodes_[id].val; }
  const Mat& grad_of(Id id) const { return nodes_[id].grad; }
  bool recording() const { return recording_; }
  size_t node_count() const { return nodes_.size(); }

  // Seeds d(loss)=1 and propagates. loss must be [1,1]. Single use per tape.
  void backward(Id loss);

 private:
  struct Node {
    Mat val;
    Mat grad;
    std::function<void()> back;
  };

  Id push(Mat v) {
    nodes_.push_back(Node{std::move(v), Mat(), nullptr});
    Id id = static_cast<Id>(nodes_.size()) - 1;
    if (recording_) {
      Node& n = nodes_[id];
      n.grad = Mat(n.val.rows, n.val.cols);
    }
    return id;
  }
  Mat& g(Id id) { return nodes_[id].grad; }
  void set_back(Id id, std::function<void()> f) {
    if (recording_) nodes_[id].back = std::move(f);
  }

  std::deque<Node> nodes_;
  bool recording_;
  bool ran_backward_ = false;
};

}  // namespace dv365
