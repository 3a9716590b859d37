#include "textsmooth/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "textsmooth/errors.hpp"
#include "textsmooth/rng.hpp"

namespace textsmooth {

namespace {

const std::vector<std::string> kSubjects = {
    "film", "movie", "picture", "story", "show", "drama", "comedy",
    "documentary", "thriller", "sequel", "feature", "production", "premiere",
    "adaptation", "saga", "western", "musical", "romance"};

const std::vector<std::string> kAttributes = {
    "acting", "plot", "script", "pacing", "dialogue", "cast", "direction",
    "music", "ending", "cinematography", "humor", "soundtrack", "editing",
    "costumes", "scenery", "narration", "casting", "lighting"};

const std::vector<std::string> kPositive = {
    "great", "superb", "excellent", "wonderful", "brilliant", "fantastic",
    "amazing", "delightful", "stunning", "marvelous", "terrific", "charming",
    "impressive", "splendid", "remarkable", "enjoyable", "graceful",
    "uplifting"};

const std::vector<std::string> kNegative = {
    "bad", "awful", "terrible", "dreadful", "horrible", "boring", "dull",
    "disappointing", "tedious", "lousy", "miserable", "shallow", "bland",
    "weak", "forgettable", "painful", "clumsy", "hollow"};

// the has/contains and some/several style alternations
const std::vector<std::string> kVerbs = {"has",      "contains", "offers",
                                         "delivers", "features", "provides"};
const std::vector<std::string> kQuantifiers = {"some",     "several", "many",
                                               "numerous", "countless", "various"};
const std::vector<std::string> kIntensifiers = {
    "really", "truly", "very", "quite", "genuinely", "absolutely", "utterly",
    "incredibly"};
const std::vector<std::string> kOpeners = {"overall",    "honestly", "frankly",
                                           "admittedly", "clearly",  "surely"};

const std::vector<std::string> kTopics = {
    "history",   "sports",    "jazz",      "poetry",    "chess",
    "travel",    "cooking",   "science",   "nature",    "politics",
    "fashion",   "autumn",    "winter",    "architecture", "painting",
    "sculpture", "astronomy", "biology",   "gardening", "sailing",
    "cycling",   "climbing",  "fishing",   "surfing",   "chemistry",
    "geology",   "algebra",   "geometry",  "robotics",  "folklore",
    "mythology", "opera",     "ballet",    "theater",   "circus",
    "carnival",  "museums",   "libraries", "castles",   "villages"};

const std::vector<std::string> kPlaces = {
    "tokyo",   "paris",  "london", "berlin",  "madrid",  "rome",
    "vienna",  "prague", "dublin", "oslo",    "cairo",   "sydney",
    "toronto", "chicago", "boston", "denver",  "seattle", "portland",
    "austin",  "memphis", "lisbon", "athens",  "helsinki", "budapest",
    "warsaw",  "zagreb",  "geneva", "munich",  "antwerp", "bologna"};

// Rank-tilted pick: weight 1/(rank+1)^exponent. Head synonyms dominate the
// labeled train split; the tail stays rare there.
int tilted_index(int n, Rng& rng, double exponent) {
    double total = 0.0;
    for (int r = 0; r < n; ++r) {
        total += 1.0 / std::pow(static_cast<double>(r + 1), exponent);
    }
    double u = rng.uniform() * total;
    for (int r = 0; r < n; ++r) {
        u -= 1.0 / std::pow(static_cast<double>(r + 1), exponent);
        if (u <= 0.0) {
            return r;
        }
    }
    return n - 1;
}

// Train-split head bias. Sentiment pools stay well covered (a bag-of-words
// learner must still see the polarity evidence), while neutral slots are
// strongly head-biased so the labeled split covers only a fraction of the
// phrasings the unlabeled corpus (and the test split) use.
constexpr double kSentimentTilt = 0.9;
constexpr double kNeutralTilt = 1.8;

struct Lists {
    std::vector<std::string> topics;
    std::vector<std::string> places;
};

// The fixed grammar uses ~130 distinct words; the topic/place filler lists
// are trimmed so the built vocabulary lands near spec.vocab_size.
Lists fit_lists(int vocab_size) {
    const int fixed = static_cast<int>(
        kSubjects.size() + kAttributes.size() + kPositive.size() +
        kNegative.size() + kVerbs.size() + kQuantifiers.size() +
        kIntensifiers.size() + kOpeners.size());
    // function words across the templates below
    const int function_words = 17;
    const int reserved = Vocabulary::num_reserved;
    int budget = vocab_size - reserved - fixed - function_words;
    if (budget < 0) {
        budget = 0;
    }
    Lists lists;
    const int n_topics = std::min<int>(static_cast<int>(kTopics.size()), (budget + 1) / 2);
    const int n_places = std::min<int>(static_cast<int>(kPlaces.size()), budget / 2);
    lists.topics.assign(kTopics.begin(), kTopics.begin() + std::max(n_topics, 1));
    lists.places.assign(kPlaces.begin(), kPlaces.begin() + std::max(n_places, 1));
    return lists;
}

std::string make_sentence(Rng& rng, int label, bool tilted, const Lists& lists) {
    const auto& pool = label == 1 ? kPositive : kNegative;
    auto sent = [&]() -> const std::string& {
        const int idx = tilted
                            ? tilted_index(static_cast<int>(pool.size()), rng, kSentimentTilt)
                            : rng.uniform_int(static_cast<int>(pool.size()));
        return pool[static_cast<std::size_t>(idx)];
    };
    auto pick = [&](const std::vector<std::string>& xs) -> const std::string& {
        const int idx = tilted
                            ? tilted_index(static_cast<int>(xs.size()), rng, kNeutralTilt)
                            : rng.uniform_int(static_cast<int>(xs.size()));
        return xs[static_cast<std::size_t>(idx)];
    };

    // Every template carries two same-polarity sentiment slots so that (a) a
    // bag-of-words learner rarely sees a sentence with no known sentiment
    // word and (b) the masked-language teacher can learn polarity agreement.
    const int tmpl = rng.uniform_int(6);
    std::string s;
    switch (tmpl) {
        case 0:
            s = "the " + pick(kSubjects) + " was " + pick(kIntensifiers) + " " +
                sent() + " and the " + pick(kAttributes) + " was " + sent();
            break;
        case 1:
            s = "the " + pick(kSubjects) + " " + pick(kVerbs) + " " +
                pick(kQuantifiers) + " " + sent() + " moments and " + sent() +
                " " + pick(kAttributes);
            break;
        case 2:
            s = pick(kOpeners) + " the " + pick(kAttributes) + " seemed " + sent() +
                " and the " + pick(kSubjects) + " felt " + sent();
            break;
        case 3:
            s = "this " + pick(kSubjects) + " is " + sent() + " because the " +
                pick(kAttributes) + " is " + pick(kIntensifiers) + " " + sent();
            break;
        case 4:
            s = pick(kOpeners) + " the " + pick(kSubjects) + " was " +
                pick(kIntensifiers) + " " + sent() + " and " + sent();
            break;
        default:
            s = "the " + pick(kSubjects) + " " + pick(kVerbs) + " " +
                pick(kQuantifiers) + " " + sent() + " and " + sent() + " scenes";
            break;
    }
    // short neutral tail; capped so no sentence outgrows max_seq_len 16
    if (tmpl >= 4 || rng.uniform() < 0.5) {
        switch (rng.uniform_int(3)) {
            case 0: s += " for fans of " + pick(lists.topics); break;
            case 1: s += " filmed in " + pick(lists.places); break;
            default: s += " set around " + pick(lists.topics); break;
        }
    }
    return s;
}

Dataset build_split(Rng& rng, int n, bool tilted, const Lists& lists,
                    const Vocabulary& vocab, int max_seq_len) {
    Dataset ds;
    ds.max_seq_len = max_seq_len;
    ds.label_set = {"negative", "positive"};
    std::vector<std::pair<std::string, int>> rows;
    rows.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const int label = i < n / 2 ? 0 : 1; // exactly balanced
        rows.emplace_back(make_sentence(rng, label, tilted, lists), label);
    }
    const std::vector<int> perm = permutation(n, rng);
    for (int i = 0; i < n; ++i) {
        const auto& [text, label] = rows[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
        ds.instances.push_back(encode_instance(text, std::nullopt, label, vocab, max_seq_len));
        ds.texts_a.push_back(text);
        ds.texts_b.emplace_back();
    }
    return ds;
}

} // namespace

SyntheticTask make_synthetic_task(const SyntheticSpec& spec) {
    if (spec.n_train <= 1 || spec.n_test <= 1 || spec.corpus_size <= 0) {
        throw ContractError("make_synthetic_task: sizes must be positive");
    }
    const Lists lists = fit_lists(spec.vocab_size);

    SyntheticTask task;
    // Independent streams so resizing one split never shifts another.
    Rng corpus_rng(mix64(spec.seed, 0xC0B155ULL));
    task.corpus.reserve(static_cast<std::size_t>(spec.corpus_size));
    for (int i = 0; i < spec.corpus_size; ++i) {
        task.corpus.push_back(
            make_sentence(corpus_rng, i % 2, /*tilted=*/false, lists));
    }
    task.vocab = Vocabulary::build(task.corpus, /*min_freq=*/1);

    Rng train_rng(mix64(spec.seed, 0x7EA1ULL));
    task.train = build_split(train_rng, spec.n_train, /*tilted=*/true, lists,
                             task.vocab, spec.max_seq_len);
    Rng test_rng(mix64(spec.seed, 0x7E57ULL));
    task.test = build_split(test_rng, spec.n_test, /*tilted=*/false, lists,
                            task.vocab, spec.max_seq_len);
    return task;
}

} // namespace textsmooth
