// Copyright 2026 The stgloc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Query encoder: word embeddings, a bidirectional GRU with mean pooling for
// the global query vector q, and three attention heads that produce the
// linguistic node vectors SV, SN and VN.
//
// Each head projects the raw word embeddings to keys, scores them against q
// without scaling, and returns the softmax-weighted sum of the GRU contexts.

#ifndef STGLOC_TEXT_ENCODER_HPP_
#define STGLOC_TEXT_ENCODER_HPP_

#include <array>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "stgloc/gru.hpp"
#include "stgloc/parameters.hpp"

namespace stg {

/// Lowercases and splits on whitespace and punctuation.
std::vector<std::string> tokenize(std::string_view text);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  Vocabulary();
  /// Specials first, then `tokens` in order, skipping duplicates.
  explicit Vocabulary(const std::vector<std::string>& tokens);

  int add(const std::string& token);
  int index(const std::string& token) const;
  const std::string& token(int index) const { return tokens_.at(static_cast<std::size_t>(index)); }
  int size() const { return static_cast<int>(tokens_.size()); }
  std::vector<int> encode(const std::vector<std::string>& tokens) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

/// |V| x d_w word vectors; row i embeds vocabulary entry i.
struct EmbeddingTable {
  Tensor weights;

  Index vocab_size() const { return weights.rows(); }
  Index dim() const { return weights.cols(); }
};

/// Word vectors in the whitespace-separated "token v1 ... vd" text format.
struct PretrainedEmbeddings {
  Vocabulary vocab;
  Matrix vectors;  // aligned with vocab; specials are zero rows
};
PretrainedEmbeddings load_text_embeddings(const std::string& path);

struct TextEncoderParams {
  EmbeddingTable table;
  GruParams gru;
  std::array<Tensor, 3> key_projection;  // d_w x 2 hidden, one per head
};

TextEncoderParams make_text_encoder(ParameterSet& params, Index vocab_size, Index word_dim, Index hidden,
                                    Rng& rng);

struct AttentionHeads {
  Tensor sv, sn, vn;
  Tensor weights;  // 3 x m, rows in SV, SN, VN order
};

struct QueryEncoding {
  Tensor q;              // 1 x 2 hidden
  Tensor sv, sn, vn;     // 1 x 2 hidden each
  Tensor word_contexts;  // m x 2 hidden
  Tensor attention_weights;
};

/// Row j is the table row of token j. Throws InputError on an empty query.
Tensor embed_query(std::span<const int> token_ids, const EmbeddingTable& table);

/// Arithmetic mean over the rows of the contexts.
Tensor pool_query(const Tensor& contexts);

AttentionHeads attend_heads(const Tensor& q, const Tensor& embeddings, const Tensor& contexts,
                            const std::array<Tensor, 3>& key_projection);

QueryEncoding encode_query(std::span<const int> token_ids, const TextEncoderParams& params);

}  // namespace stg

#endif  // STGLOC_TEXT_ENCODER_HPP_
