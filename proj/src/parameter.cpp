/*
 * Copyright 2026 Tunelab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "tunelab/parameter.hpp"

#include <cstdio>

#include "tunelab/error.hpp"

namespace tunelab {

std::string BlockLabel::str() const {
  switch (kind) {
    case Kind::TokenEmbedding:
      return "token-embedding";
    case Kind::PositionalEmbedding:
      return "positional-embedding";
    case Kind::EncoderBlock:
      return "encoder-block[" + std::to_string(index) + "]";
    case Kind::DecoderBlock:
      return "decoder-block[" + std::to_string(index) + "]";
    case Kind::OutputLayer:
      return "output-layer";
    case Kind::Prefix:
      return "prefix";
  }
  fail(ErrorCode::Internal, "unknown block label kind");
}

BlockLabel BlockLabel::parse(const std::string& text) {
  if (text == "token-embedding") return token_embedding();
  if (text == "positional-embedding") return positional_embedding();
  if (text == "output-layer") return output_layer();
  if (text == "prefix") return prefix();
  for (const char* stem : {"encoder-block[", "decoder-block["}) {
    std::string prefix_text(stem);
    if (text.rfind(prefix_text, 0) == 0 && text.back() == ']') {
      std::string digits = text.substr(prefix_text.size(),
                                       text.size() - prefix_text.size() - 1);
      if (!digits.empty()) {
        int idx = 0;
        for (char ch : digits) {
          if (ch < '0' || ch > '9') {
            fail(ErrorCode::InvalidArgument,
                 "bad block label index: " + text);
          }
          idx = idx * 10 + (ch - '0');
        }
        return prefix_text[0] == 'e' ? encoder_block(idx) : decoder_block(idx);
      }
    }
  }
  fail(ErrorCode::InvalidArgument, "unrecognized block label: " + text);
}

void Parameter::accumulate_grad(const Tensor& g) {
  if (frozen) {
    fail(ErrorCode::Internal,
         "gradient reached frozen parameter '" + id + "'");
  }
  if (!g.same_shape(value)) {
    fail(ErrorCode::Shape, "gradient shape mismatch for parameter '" + id +
                               "'");
  }
  if (!grad.has_value()) {
    grad.emplace(value.rows(), value.cols());
  }
  double* dst = grad->data();
  const double* src = g.data();
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += src[i];
}

}  // namespace tunelab
