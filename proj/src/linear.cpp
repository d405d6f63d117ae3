#include "subix/linear.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "subix/error.hpp"
#include "subix/fileio.hpp"
#include "subix/random.hpp"
#include "subix/text.hpp"

namespace subix {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kFeaturesMagic = "SUBIX-LINEAR-FEATURES 1";
constexpr std::string_view kTreeMagic = "SUBIX-LINEAR-TREE 1";

std::string format_double(double value) {
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.17g", value);
    return buffer;
}

double parse_double(std::string_view text, const std::string& where) {
    std::string copy(text);
    char* end = nullptr;
    const double value = std::strtod(copy.c_str(), &end);
    if (copy.empty() || end != copy.c_str() + copy.size()) {
        throw ValidationError(where + ": bad number '" + copy + "'");
    }
    return value;
}

std::uint64_t parse_unsigned(std::string_view text, const std::string& where) {
    std::string copy(text);
    char* end = nullptr;
    const auto value = std::strtoull(copy.c_str(), &end, 10);
    if (copy.empty() || end != copy.c_str() + copy.size()) {
        throw ValidationError(where + ": bad integer '" + copy + "'");
    }
    return value;
}

std::vector<std::string_view> split(std::string_view text, char separator) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto next = text.find(separator, start);
        if (next == std::string_view::npos) {
            parts.push_back(text.substr(start));
            return parts;
        }
        parts.push_back(text.substr(start, next - start));
        start = next + 1;
    }
}

std::string format_sparse(const SparseVector& v) {
    std::string out;
    for (const auto& [index, value] : v) {
        if (!out.empty()) {
            out.push_back(' ');
        }
        out += std::to_string(index);
        out.push_back(':');
        out += format_double(value);
    }
    return out;
}

SparseVector parse_sparse(std::string_view text, const std::string& where) {
    SparseVector v;
    if (text.empty()) {
        return v;
    }
    for (auto item : split(text, ' ')) {
        const auto colon = item.find(':');
        if (colon == std::string_view::npos) {
            throw ValidationError(where + ": bad sparse entry '" + std::string(item) + "'");
        }
        v.emplace_back(static_cast<std::uint32_t>(parse_unsigned(item.substr(0, colon), where)),
                       parse_double(item.substr(colon + 1), where));
    }
    return v;
}

std::vector<std::string> record_tokens(const Record& record) {
    auto tokens = normalize(record.title);
    auto rest = normalize(record.abstract);
    tokens.insert(tokens.end(), std::make_move_iterator(rest.begin()),
                  std::make_move_iterator(rest.end()));
    return tokens;
}

/// Adds `scale * v` into a dense accumulator.
void accumulate(std::vector<double>& dense, const SparseVector& v, double scale = 1.0) {
    for (const auto& [index, value] : v) {
        dense[index] += scale * value;
    }
}

SparseVector to_sparse_unit(const std::vector<double>& dense) {
    SparseVector v;
    for (std::uint32_t i = 0; i < dense.size(); ++i) {
        if (dense[i] != 0.0) {
            v.emplace_back(i, dense[i]);
        }
    }
    normalize_l2(v);
    return v;
}

double dot_dense(const SparseVector& a, const std::vector<double>& dense) {
    double sum = 0.0;
    for (const auto& [index, value] : a) {
        sum += value * dense[index];
    }
    return sum;
}

}  // namespace

double dot(const SparseVector& a, const SparseVector& b) {
    double sum = 0.0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (ia->first < ib->first) {
            ++ia;
        } else if (ib->first < ia->first) {
            ++ib;
        } else {
            sum += ia->second * ib->second;
            ++ia;
            ++ib;
        }
    }
    return sum;
}

double l2_norm(const SparseVector& v) {
    double sum = 0.0;
    for (const auto& [index, value] : v) {
        sum += value * value;
    }
    return std::sqrt(sum);
}

void normalize_l2(SparseVector& v) {
    const double norm = l2_norm(v);
    if (norm == 0.0) {
        return;
    }
    for (auto& entry : v) {
        entry.second /= norm;
    }
}

std::vector<std::string> extract_ngrams(const std::vector<std::string>& tokens, int ngram) {
    std::vector<std::string> out;
    for (int n = 1; n <= ngram; ++n) {
        const auto width = static_cast<std::size_t>(n);
        for (std::size_t i = 0; i + width <= tokens.size(); ++i) {
            std::string gram = tokens[i];
            for (std::size_t k = 1; k < width; ++k) {
                gram.push_back(' ');
                gram += tokens[i + k];
            }
            out.push_back(std::move(gram));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// FeatureSpace

FeatureSpace FeatureSpace::fit(const std::vector<std::vector<std::string>>& documents, int ngram,
                               int min_df) {
    if (ngram < 1) {
        throw ValidationError("ngram must be >= 1");
    }
    if (min_df < 1) {
        throw ValidationError("min_df must be >= 1");
    }
    std::unordered_map<std::string, std::uint32_t> counts;
    for (const auto& tokens : documents) {
        auto grams = extract_ngrams(tokens, ngram);
        std::sort(grams.begin(), grams.end());
        grams.erase(std::unique(grams.begin(), grams.end()), grams.end());
        for (auto& gram : grams) {
            ++counts[std::move(gram)];
        }
    }

    FeatureSpace space;
    space.ngram_ = ngram;
    space.min_df_ = min_df;
    space.document_count_ = documents.size();
    for (const auto& [gram, df] : counts) {
        if (df >= static_cast<std::uint32_t>(min_df)) {
            space.ngrams_.push_back(gram);
        }
    }
    std::sort(space.ngrams_.begin(), space.ngrams_.end());
    const double n = static_cast<double>(documents.size());
    for (const auto& gram : space.ngrams_) {
        const auto df = counts.at(gram);
        space.df_.push_back(df);
        space.idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(df))) + 1.0);
    }
    space.rebuild_lookup();
    return space;
}

void FeatureSpace::rebuild_lookup() {
    lookup_.clear();
    lookup_.reserve(ngrams_.size());
    for (std::uint32_t i = 0; i < ngrams_.size(); ++i) {
        lookup_.emplace(ngrams_[i], i);
    }
}

SparseVector FeatureSpace::vectorize(const std::vector<std::string>& tokens) const {
    std::map<std::uint32_t, double> counts;
    for (const auto& gram : extract_ngrams(tokens, ngram_)) {
        auto it = lookup_.find(gram);
        if (it != lookup_.end()) {
            counts[it->second] += 1.0;
        }
    }
    SparseVector v;
    v.reserve(counts.size());
    for (const auto& [index, count] : counts) {
        v.emplace_back(index, count * idf_[index]);
    }
    normalize_l2(v);
    return v;
}

std::string FeatureSpace::serialize() const {
    std::string out(kFeaturesMagic);
    out += "\nngram\t" + std::to_string(ngram_);
    out += "\nmin_df\t" + std::to_string(min_df_);
    out += "\ndocuments\t" + std::to_string(document_count_);
    out += "\nfeatures\t" + std::to_string(ngrams_.size()) + "\n";
    for (std::size_t i = 0; i < ngrams_.size(); ++i) {
        out += ngrams_[i] + "\t" + std::to_string(df_[i]) + "\t" + format_double(idf_[i]) + "\n";
    }
    return out;
}

FeatureSpace FeatureSpace::deserialize(std::string_view text, const std::string& source_name) {
    FeatureSpace space;
    std::size_t expected = 0;
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        const std::string where = source_name + ":" + std::to_string(line_no);
        if (line_no == 1) {
            if (line != kFeaturesMagic) {
                throw ValidationError(where + ": not a feature file (bad magic header)");
            }
            return;
        }
        const auto cells = split(line, '\t');
        if (line_no <= 5) {
            static constexpr const char* kKeys[] = {"ngram", "min_df", "documents", "features"};
            if (cells.size() != 2 || cells[0] != kKeys[line_no - 2]) {
                throw ValidationError(where + ": expected '" + kKeys[line_no - 2] + "'");
            }
            const auto value = parse_unsigned(cells[1], where);
            switch (line_no) {
                case 2: space.ngram_ = static_cast<int>(value); break;
                case 3: space.min_df_ = static_cast<int>(value); break;
                case 4: space.document_count_ = value; break;
                default: expected = value; break;
            }
            return;
        }
        if (cells.size() != 3) {
            throw ValidationError(where + ": malformed feature row");
        }
        space.ngrams_.emplace_back(cells[0]);
        space.df_.push_back(static_cast<std::uint32_t>(parse_unsigned(cells[1], where)));
        space.idf_.push_back(parse_double(cells[2], where));
    });
    if (space.ngrams_.size() != expected || expected == 0) {
        throw ValidationError(source_name + ": truncated feature file");
    }
    space.rebuild_lookup();
    return space;
}

// ---------------------------------------------------------------------------
// Clustering

std::vector<std::uint32_t> spherical_kmeans(const std::vector<SparseVector>& points,
                                            std::size_t cluster_count, std::uint64_t seed,
                                            int max_iterations) {
    const std::size_t n = points.size();
    if (cluster_count < 1) {
        throw ValidationError("cluster count must be >= 1");
    }
    if (n == 0) {
        return {};
    }
    cluster_count = std::min(cluster_count, n);
    std::uint32_t dimension = 0;
    for (const auto& p : points) {
        if (!p.empty()) {
            dimension = std::max(dimension, p.back().first + 1);
        }
    }

    // k-means++ seeding with cosine distance
    Rng rng(seed);
    std::vector<std::vector<double>> centroids;
    std::vector<bool> chosen(n, false);
    auto add_centroid = [&](std::size_t point) {
        std::vector<double> dense(dimension, 0.0);
        accumulate(dense, points[point]);
        centroids.push_back(std::move(dense));
        chosen[point] = true;
    };
    add_centroid(rng.index(n));
    std::vector<double> distance(n, std::numeric_limits<double>::infinity());
    while (centroids.size() < cluster_count) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = std::max(0.0, 1.0 - dot_dense(points[i], centroids.back()));
            distance[i] = std::min(distance[i], d);
            if (!chosen[i]) {
                total += distance[i] * distance[i];
            }
        }
        std::size_t pick = n;
        if (total > 0.0) {
            double target = rng.uniform() * total;
            for (std::size_t i = 0; i < n; ++i) {
                if (chosen[i]) {
                    continue;
                }
                target -= distance[i] * distance[i];
                pick = i;
                if (target < 0.0) {
                    break;
                }
            }
        } else {
            std::vector<std::size_t> free;
            for (std::size_t i = 0; i < n; ++i) {
                if (!chosen[i]) {
                    free.push_back(i);
                }
            }
            pick = free[rng.index(free.size())];
        }
        add_centroid(pick);
    }

    std::vector<std::uint32_t> assignment(n, 0);
    std::vector<double> similarity(n, 0.0);
    auto assign = [&]() {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            std::uint32_t best = 0;
            double best_sim = -std::numeric_limits<double>::infinity();
            for (std::uint32_t c = 0; c < centroids.size(); ++c) {
                const double sim = dot_dense(points[i], centroids[c]);
                if (sim > best_sim) {
                    best_sim = sim;
                    best = c;
                }
            }
            changed = changed || assignment[i] != best;
            assignment[i] = best;
            similarity[i] = best_sim;
        }
        return changed;
    };

    assign();
    for (int iteration = 0; iteration < max_iterations; ++iteration) {
        std::vector<std::size_t> sizes(cluster_count, 0);
        for (auto c : assignment) {
            ++sizes[c];
        }
        bool reseeded = false;
        for (std::uint32_t c = 0; c < cluster_count; ++c) {
            if (sizes[c] != 0) {
                continue;
            }
            std::size_t farthest = n;
            for (std::size_t i = 0; i < n; ++i) {
                if (sizes[assignment[i]] > 1 &&
                    (farthest == n || similarity[i] < similarity[farthest])) {
                    farthest = i;
                }
            }
            if (farthest == n) {
                break;
            }
            --sizes[assignment[farthest]];
            assignment[farthest] = c;
            similarity[farthest] = 1.0;
            sizes[c] = 1;
            reseeded = true;
        }
        for (std::uint32_t c = 0; c < cluster_count; ++c) {
            std::fill(centroids[c].begin(), centroids[c].end(), 0.0);
        }
        for (std::size_t i = 0; i < n; ++i) {
            accumulate(centroids[assignment[i]], points[i]);
        }
        for (auto& centroid : centroids) {
            double norm = 0.0;
            for (double x : centroid) {
                norm += x * x;
            }
            norm = std::sqrt(norm);
            if (norm > 0.0) {
                for (double& x : centroid) {
                    x /= norm;
                }
            }
        }
        if (!assign() && !reseeded) {
            break;
        }
    }
    return assignment;
}

// ---------------------------------------------------------------------------
// Training and scoring

LinearModel train_linear(const Corpus& corpus, const SubjectVocabulary& vocabulary,
                         const LanguageCode& language, const LinearParams& params) {
    if (corpus.records.empty()) {
        throw ValidationError("cannot train on an empty corpus");
    }
    if (params.clusters < 0) {
        throw ValidationError("cluster count must be >= 1");
    }
    if (params.beam < 1) {
        throw ValidationError("beam must be >= 1");
    }
    if (!vocabulary.has_language(language)) {
        throw ValidationError("language '" + language + "' is not declared in the vocabulary");
    }

    std::vector<std::vector<std::string>> documents;
    documents.reserve(corpus.size());
    bool any_labeled = false;
    for (const auto& record : corpus.records) {
        if (record.language != language) {
            throw ValidationError("training record '" + record.id + "' is in '" +
                                  record.language + "', expected '" + language + "'");
        }
        for (const auto& subject : record.subjects) {
            vocabulary.at(subject);
        }
        any_labeled = any_labeled || !record.subjects.empty();
        documents.push_back(record_tokens(record));
    }
    if (!any_labeled) {
        throw ValidationError("training corpus has no labeled records");
    }

    FeatureSpace features = FeatureSpace::fit(documents, params.ngram, params.min_df);
    if (features.size() == 0) {
        throw ValidationError("no features survive min_df=" + std::to_string(params.min_df));
    }

    std::set<SubjectId> subject_set;
    for (const auto& record : corpus.records) {
        subject_set.insert(record.subjects.begin(), record.subjects.end());
    }
    LabelTree tree;
    tree.subjects.assign(subject_set.begin(), subject_set.end());
    std::unordered_map<std::string, std::uint32_t> subject_index;
    for (std::uint32_t i = 0; i < tree.subjects.size(); ++i) {
        subject_index.emplace(tree.subjects[i], i);
    }

    std::vector<std::map<std::uint32_t, double>> sums(tree.subjects.size());
    for (std::size_t d = 0; d < documents.size(); ++d) {
        const auto& subjects = corpus.records[d].subjects;
        if (subjects.empty()) {
            continue;
        }
        const auto vector = features.vectorize(documents[d]);
        for (const auto& subject : subjects) {
            auto& sum = sums[subject_index.at(subject)];
            for (const auto& [index, value] : vector) {
                sum[index] += value;
            }
        }
    }
    tree.prototypes.reserve(sums.size());
    for (std::size_t s = 0; s < sums.size(); ++s) {
        SparseVector prototype(sums[s].begin(), sums[s].end());
        normalize_l2(prototype);
        if (prototype.empty()) {
            log::warn("subject '" + tree.subjects[s] +
                      "' has no surviving features in its training records");
        }
        tree.prototypes.push_back(std::move(prototype));
    }

    std::size_t cluster_count =
        params.clusters == 0
            ? static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(tree.subjects.size()))))
            : static_cast<std::size_t>(params.clusters);
    cluster_count = std::min(cluster_count, tree.subjects.size());

    const auto assignment =
        spherical_kmeans(tree.prototypes, cluster_count, params.seed, params.max_iterations);
    tree.clusters.assign(cluster_count, {});
    for (std::uint32_t s = 0; s < assignment.size(); ++s) {
        tree.clusters[assignment[s]].push_back(s);
    }
    // clusters that stayed empty (all-identical prototypes) carry no information
    tree.clusters.erase(std::remove_if(tree.clusters.begin(), tree.clusters.end(),
                                       [](const auto& members) { return members.empty(); }),
                        tree.clusters.end());
    for (const auto& members : tree.clusters) {
        std::map<std::uint32_t, double> sum;
        for (auto s : members) {
            for (const auto& [index, value] : tree.prototypes[s]) {
                sum[index] += value;
            }
        }
        SparseVector centroid(sum.begin(), sum.end());
        normalize_l2(centroid);
        tree.centroids.push_back(std::move(centroid));
    }

    return LinearModel(language, params, std::move(features), std::move(tree));
}

void LinearModel::check_language(const Record& record) const {
    if (record.language != language_) {
        throw ValidationError("record '" + record.id + "' is in '" + record.language +
                              "' but the linear model is for '" + language_ + "'");
    }
}

SparseVector LinearModel::vectorize(const Record& record) const {
    return features_.vectorize(record_tokens(record));
}

SuggestionList LinearModel::score_subjects(const SparseVector& query,
                                           const std::vector<std::uint32_t>& candidates,
                                           std::size_t limit) const {
    SuggestionList out;
    for (auto s : candidates) {
        const double cosine = dot(query, tree_.prototypes[s]);
        if (cosine > 0.0) {
            out.push_back({tree_.subjects[s], std::min(1.0, cosine)});
        }
    }
    rank_suggestions(out, limit);
    return out;
}

SuggestionList LinearModel::suggest(const Record& record, std::size_t limit) const {
    check_language(record);
    const auto query = vectorize(record);
    if (query.empty()) {
        return {};
    }
    std::vector<std::pair<double, std::uint32_t>> ranked;
    ranked.reserve(tree_.centroids.size());
    for (std::uint32_t c = 0; c < tree_.centroids.size(); ++c) {
        ranked.emplace_back(dot(query, tree_.centroids[c]), c);
    }
    const auto beam = std::min<std::size_t>(static_cast<std::size_t>(params_.beam), ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(beam),
                      ranked.end(), [](const auto& a, const auto& b) {
                          return a.first != b.first ? a.first > b.first : a.second < b.second;
                      });
    std::vector<std::uint32_t> candidates;
    for (std::size_t i = 0; i < beam; ++i) {
        const auto& members = tree_.clusters[ranked[i].second];
        candidates.insert(candidates.end(), members.begin(), members.end());
    }
    return score_subjects(query, candidates, limit);
}

SuggestionList LinearModel::suggest_flat(const Record& record, std::size_t limit) const {
    check_language(record);
    const auto query = vectorize(record);
    if (query.empty()) {
        return {};
    }
    std::vector<std::uint32_t> all(tree_.subjects.size());
    std::iota(all.begin(), all.end(), 0u);
    return score_subjects(query, all, limit);
}

SuggestionList suggest_linear(const LinearModel& model, const Record& record, std::size_t limit) {
    return model.suggest(record, limit);
}

// ---------------------------------------------------------------------------
// Persistence

void save_linear(const LinearModel& model, const fs::path& directory) {
    std::string features = model.features().serialize();
    const auto& p = model.params();
    std::string tree(kTreeMagic);
    tree += "\nlanguage\t" + model.language();
    tree += "\nparams\tclusters=" + std::to_string(p.clusters) + "\tbeam=" +
            std::to_string(p.beam) + "\tseed=" + std::to_string(p.seed) +
            "\tmax_iterations=" + std::to_string(p.max_iterations);
    const auto& t = model.tree();
    tree += "\nsubjects\t" + std::to_string(t.subjects.size()) + "\n";
    for (std::size_t s = 0; s < t.subjects.size(); ++s) {
        tree += t.subjects[s] + "\t" + format_sparse(t.prototypes[s]) + "\n";
    }
    tree += "clusters\t" + std::to_string(t.clusters.size()) + "\n";
    for (std::size_t c = 0; c < t.clusters.size(); ++c) {
        std::string members;
        for (auto s : t.clusters[c]) {
            if (!members.empty()) {
                members.push_back(' ');
            }
            members += std::to_string(s);
        }
        tree += members + "\t" + format_sparse(t.centroids[c]) + "\n";
    }
    write_file_atomic(directory / "features.txt", features);
    write_file_atomic(directory / "tree.txt", tree);
}

LinearModel load_linear(const fs::path& directory) {
    const auto features_path = directory / "features.txt";
    const auto tree_path = directory / "tree.txt";
    FeatureSpace features = FeatureSpace::deserialize(read_file(features_path),
                                                      features_path.string());
    const std::string text = read_file(tree_path);
    const std::string source = tree_path.string();

    LanguageCode language;
    LinearParams params;
    params.ngram = features.ngram();
    params.min_df = features.min_df();
    LabelTree tree;
    std::size_t subject_count = 0;
    std::size_t cluster_count = 0;
    enum class Section { header, subjects, clusters } section = Section::header;

    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        const std::string where = source + ":" + std::to_string(line_no);
        const auto cells = split(line, '\t');
        if (line_no == 1) {
            if (line != kTreeMagic) {
                throw ValidationError(where + ": not a tree file (bad magic header)");
            }
            return;
        }
        if (line_no == 2) {
            if (cells.size() != 2 || cells[0] != "language") {
                throw ValidationError(where + ": expected language");
            }
            language = std::string(cells[1]);
            return;
        }
        if (line_no == 3) {
            if (cells.empty() || cells[0] != "params") {
                throw ValidationError(where + ": expected params");
            }
            for (std::size_t i = 1; i < cells.size(); ++i) {
                const auto eq = cells[i].find('=');
                if (eq == std::string_view::npos) {
                    throw ValidationError(where + ": bad param '" + std::string(cells[i]) + "'");
                }
                const auto key = cells[i].substr(0, eq);
                const auto value = parse_unsigned(cells[i].substr(eq + 1), where);
                if (key == "clusters") params.clusters = static_cast<int>(value);
                else if (key == "beam") params.beam = static_cast<int>(value);
                else if (key == "seed") params.seed = value;
                else if (key == "max_iterations") params.max_iterations = static_cast<int>(value);
                else throw ValidationError(where + ": unknown param '" + std::string(key) + "'");
            }
            return;
        }
        if (cells.size() == 2 && cells[0] == "subjects" && section == Section::header) {
            subject_count = parse_unsigned(cells[1], where);
            section = Section::subjects;
            return;
        }
        if (section == Section::subjects && tree.subjects.size() == subject_count) {
            if (cells.size() != 2 || cells[0] != "clusters") {
                throw ValidationError(where + ": expected clusters");
            }
            cluster_count = parse_unsigned(cells[1], where);
            section = Section::clusters;
            return;
        }
        if (cells.size() != 2) {
            throw ValidationError(where + ": malformed tree row");
        }
        if (section == Section::subjects) {
            tree.subjects.emplace_back(cells[0]);
            tree.prototypes.push_back(parse_sparse(cells[1], where));
        } else if (section == Section::clusters) {
            std::vector<std::uint32_t> members;
            for (auto item : split(cells[0], ' ')) {
                const auto s = parse_unsigned(item, where);
                if (s >= tree.subjects.size()) {
                    throw ValidationError(where + ": cluster member out of range");
                }
                members.push_back(static_cast<std::uint32_t>(s));
            }
            tree.clusters.push_back(std::move(members));
            tree.centroids.push_back(parse_sparse(cells[1], where));
        } else {
            throw ValidationError(where + ": unexpected row");
        }
    });
    if (tree.subjects.size() != subject_count || tree.clusters.size() != cluster_count ||
        cluster_count == 0) {
        throw ValidationError(source + ": truncated tree file");
    }
    return LinearModel(std::move(language), params, std::move(features), std::move(tree));
}

}  // namespace subix
