#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "norton/matrix.hpp"

namespace norton {

// Filesystem-level failures (missing files, unwritable outputs). Content
// validation failures throw std::invalid_argument instead; the CLI maps the
// two classes to exit codes 2 and 1.
class io_error : public std::runtime_error {
 public:
  explicit io_error(const std::string& message) : std::runtime_error(message) {}
};

// One clip-caption pair with its original timestamp span.
struct ClipRecord {
  TokenMatrix clip_tokens;     // f frames x dim
  TokenMatrix caption_tokens;  // w words x dim
  double start_s = 0.0;
  double end_s = 0.0;
};

// A long video: ordered clips with their originally aligned captions.
struct VideoDocument {
  std::string id;
  std::vector<ClipRecord> clips;
};

struct Dataset {
  std::vector<VideoDocument> videos;
  std::size_t dim = 0;
};

// Prescribed row/column mass for a transport problem.
struct Marginals {
  std::vector<double> mu;
  std::vector<double> nu;
};

struct TransportPlan {
  Matrix values;  // n x m, nonnegative
  Marginals marginals;
  double epsilon = 0.0;
};

// Scales each row of t to unit Euclidean norm. Throws on zero rows.
TokenMatrix l2_normalize_rows(const TokenMatrix& t);

// Mean of token rows; the pooled clip/caption representation.
std::vector<double> mean_pool(const TokenMatrix& t);

void validate_token_matrix(const TokenMatrix& t, const std::string& context);
void validate_marginals(const Marginals& m, double tolerance = 1e-9);

}  // namespace norton
