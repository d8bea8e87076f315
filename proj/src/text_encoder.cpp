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

#include "stgloc/text_encoder.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "stgloc/errors.hpp"

namespace stg {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c) || std::ispunct(c)) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

Vocabulary::Vocabulary() {
  add("<pad>");
  add("<unk>");
}

Vocabulary::Vocabulary(const std::vector<std::string>& tokens) : Vocabulary() {
  for (const auto& t : tokens) add(t);
}

int Vocabulary::add(const std::string& token) {
  auto [it, inserted] = index_.emplace(token, size());
  if (inserted) tokens_.push_back(token);
  return it->second;
}

int Vocabulary::index(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(index(t));
  return ids;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw LoadError("cannot write vocabulary: " + path);
  for (const auto& t : tokens_) out << t << '\n';
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open vocabulary: " + path);
  Vocabulary v;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) throw ParseError("empty vocabulary entry", n);
    if (n == 1 && line != "<pad>") throw ParseError("vocabulary must start with <pad>", n);
    if (n == 2 && line != "<unk>") throw ParseError("vocabulary must list <unk> second", n);
    v.add(line);
  }
  return v;
}

PretrainedEmbeddings load_text_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open embedding file: " + path);
  std::vector<std::string> words;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t n = 0;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    std::vector<double> v;
    double x;
    while (ls >> x) v.push_back(x);
    if (!ls.eof()) throw ParseError("non-numeric vector component", n);
    if (v.empty()) throw ParseError("token without vector", n);
    if (dim == 0) dim = v.size();
    if (v.size() != dim) {
      throw ParseError("expected " + std::to_string(dim) + " components, got " + std::to_string(v.size()), n);
    }
    words.push_back(word);
    rows.push_back(std::move(v));
  }
  PretrainedEmbeddings out;
  out.vocab = Vocabulary(words);
  out.vectors = Matrix::Zero(out.vocab.size(), static_cast<Index>(dim));
  for (std::size_t i = 0; i < words.size(); ++i) {
    const int r = out.vocab.index(words[i]);
    for (std::size_t c = 0; c < dim; ++c) out.vectors(r, static_cast<Index>(c)) = rows[i][c];
  }
  return out;
}

TextEncoderParams make_text_encoder(ParameterSet& params, Index vocab_size, Index word_dim, Index hidden,
                                    Rng& rng) {
  TextEncoderParams p;
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix table(vocab_size, word_dim);
  for (Index i = 0; i < table.size(); ++i) table.data()[i] = normal(rng);
  table.row(Vocabulary::kPad).setZero();
  p.table.weights = params.add("text.embedding", std::move(table));
  p.gru = make_bigru(params, "text.gru", word_dim, hidden, 1, rng);
  const char* heads[3] = {"text.key_sv", "text.key_sn", "text.key_vn"};
  for (int h = 0; h < 3; ++h) {
    p.key_projection[static_cast<std::size_t>(h)] = params.add(heads[h], xavier_uniform(word_dim, 2 * hidden, rng));
  }
  return p;
}

Tensor embed_query(std::span<const int> token_ids, const EmbeddingTable& table) {
  if (token_ids.empty()) throw InputError("embed_query: empty query");
  std::vector<int> ids(token_ids.begin(), token_ids.end());
  for (int& id : ids) {
    if (id < 0 || id >= table.vocab_size()) id = Vocabulary::kUnk;
  }
  return gather_rows(table.weights, ids);
}

Tensor pool_query(const Tensor& contexts) { return mean_axis(contexts, 0); }

AttentionHeads attend_heads(const Tensor& q, const Tensor& embeddings, const Tensor& contexts,
                            const std::array<Tensor, 3>& key_projection) {
  if (embeddings.rows() != contexts.rows()) {
    throw DimensionError("attend_heads: " + std::to_string(embeddings.rows()) + " embeddings vs " +
                         std::to_string(contexts.rows()) + " contexts");
  }
  std::array<Tensor, 3> out;
  std::array<Tensor, 3> weights;
  for (std::size_t h = 0; h < 3; ++h) {
    const Tensor keys = embeddings * key_projection[h];  // m x dim(q)
    weights[h] = softmax(q * transpose(keys), 1);        // 1 x m
    out[h] = weights[h] * contexts;
  }
  return {out[0], out[1], out[2], concat_rows(weights)};
}

QueryEncoding encode_query(std::span<const int> token_ids, const TextEncoderParams& params) {
  const Tensor words = embed_query(token_ids, params.table);
  const Tensor contexts = bigru_forward(words, params.gru);
  const Tensor q = pool_query(contexts);
  AttentionHeads heads = attend_heads(q, words, contexts, params.key_projection);
  return {q, heads.sv, heads.sn, heads.vn, contexts, heads.weights};
}

}  // namespace stg
