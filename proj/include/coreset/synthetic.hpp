#pragma once

#include <algorithm>
#include <vector>

#include "coreset/common.hpp"
#include "coreset/svd.hpp"

namespace coreset {

inline Matrix gaussian_stream(Index n, Index d, std::uint64_t seed) {
    Rng rng(derive_seed(seed, "gaussian-stream"));
    Matrix a(n, d);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < d; ++j) a(i, j) = rng.gaussian();
    return a;
}

/// Rank-12 stream in R^30: unit rows with uniform [0,1] coefficients, 99.99%
/// drawn from an 8-dimensional subspace and the rest from an orthogonal
/// 4-dimensional one, scattered at random positions.
struct TwoSubspaceStream {
    Matrix rows;
    std::vector<Index> rare_indices;
};

inline TwoSubspaceStream two_subspace_stream(Index n, std::uint64_t seed, Index d = 30,
                                             Index bulk_dim = 8, Index rare_dim = 4,
                                             double rare_fraction = 1e-4) {
    Rng rng(derive_seed(seed, "two-subspace"));
    Matrix g(d, bulk_dim + rare_dim);
    for (Index i = 0; i < d; ++i)
        for (Index j = 0; j < g.cols(); ++j) g(i, j) = rng.gaussian();
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix basis = qr.householderQ() * Matrix::Identity(d, bulk_dim + rare_dim);

    Index rare_count = std::max<Index>(1, static_cast<Index>(std::llround(rare_fraction * n)));
    std::vector<Index> all(n);
    for (Index i = 0; i < n; ++i) all[i] = i;
    std::vector<Index> rare;
    for (Index i = 0; i < rare_count; ++i) {
        Index pick = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n - i))) + i;
        std::swap(all[i], all[pick]);
        rare.push_back(all[i]);
    }
    std::sort(rare.begin(), rare.end());

    TwoSubspaceStream out;
    out.rows.resize(n, d);
    out.rare_indices = rare;
    std::size_t next_rare = 0;
    for (Index i = 0; i < n; ++i) {
        bool is_rare = next_rare < rare.size() && rare[next_rare] == i;
        if (is_rare) ++next_rare;
        Index kdim = is_rare ? rare_dim : bulk_dim;
        Index offset = is_rare ? bulk_dim : 0;
        Vector coeff(kdim);
        for (Index j = 0; j < kdim; ++j) coeff[j] = rng.uniform();
        Vector row = basis.middleCols(offset, kdim) * coeff;
        double nrm = row.norm();
        if (nrm > 0.0) row /= nrm;
        out.rows.row(i) = row.transpose();
    }
    return out;
}

/// Single-topic corpus: each document picks one topic and draws a fixed
/// number of words from it; rows are word-count vectors normalized to unit
/// l1 norm.
struct TopicCorpus {
    Matrix docs;                  // n x words, each row on the simplex
    std::vector<Vector> topics;   // k reference distributions over words
    Vector topic_weights;         // mixing weights
};

inline TopicCorpus synth_topic_corpus(Index n_docs, Index n_words, Index k, std::uint64_t seed,
                                      Index min_words = 40, Index max_words = 80) {
    Rng rng(derive_seed(seed, "topic-corpus"));
    TopicCorpus corpus;

    // Sparse, well-separated topics: a handful of heavy words each plus a
    // light background.
    for (Index t = 0; t < k; ++t) {
        Vector topic = Vector::Zero(n_words);
        Index heavy = 6;
        for (Index h = 0; h < heavy; ++h) {
            Index w = (t * heavy + h) % n_words;
            topic[w] = 0.5 + rng.uniform();
        }
        for (Index w = 0; w < n_words; ++w) topic[w] += 0.02 * rng.uniform();
        topic /= topic.lpNorm<1>();
        corpus.topics.push_back(topic);
    }

    corpus.topic_weights = Vector::Constant(k, 1.0 / static_cast<double>(k));

    corpus.docs.resize(n_docs, n_words);
    for (Index i = 0; i < n_docs; ++i) {
        Index t = static_cast<Index>(rng.below(static_cast<std::uint64_t>(k)));
        const Vector& topic = corpus.topics[t];
        Index m = min_words + static_cast<Index>(rng.below(static_cast<std::uint64_t>(max_words - min_words + 1)));
        Vector counts = Vector::Zero(n_words);
        for (Index w = 0; w < m; ++w) {
            double u = rng.uniform();
            double acc = 0.0;
            Index pick = n_words - 1;
            for (Index j = 0; j < n_words; ++j) {
                acc += topic[j];
                if (u < acc) {
                    pick = j;
                    break;
                }
            }
            counts[pick] += 1.0;
        }
        corpus.docs.row(i) = (counts / counts.lpNorm<1>()).transpose();
    }
    return corpus;
}

}  // namespace coreset
