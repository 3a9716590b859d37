#include "textsmooth/data.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "textsmooth/errors.hpp"
#include "textsmooth/io_util.hpp"

namespace textsmooth {

EncodedInstance encode_instance(const std::string& text_a,
                                const std::optional<std::string>& text_b,
                                int label, const Vocabulary& vocab,
                                int max_seq_len) {
    const bool pair = text_b.has_value();
    const int num_special = pair ? 3 : 2; // [CLS] + [SEP] per segment
    if (max_seq_len < num_special + 1) {
        throw ContractError("encode_instance: max_seq_len " +
                            std::to_string(max_seq_len) + " leaves no room for text");
    }
    if (label < 0) {
        throw ContractError("encode_instance: negative label");
    }
    std::vector<std::string> a = tokenize(text_a);
    std::vector<std::string> b = pair ? tokenize(*text_b) : std::vector<std::string>{};
    const std::size_t budget = static_cast<std::size_t>(max_seq_len - num_special);
    while (a.size() + b.size() > budget) {
        if (a.size() > b.size()) {
            a.pop_back();
        } else {
            b.pop_back();
        }
    }

    EncodedInstance inst;
    inst.label = label;
    inst.token_ids.reserve(static_cast<std::size_t>(max_seq_len));
    inst.segment_ids.reserve(static_cast<std::size_t>(max_seq_len));

    inst.token_ids.push_back(Vocabulary::cls_id);
    inst.segment_ids.push_back(0);
    for (const std::string& tok : a) {
        inst.token_ids.push_back(vocab.id(tok));
        inst.segment_ids.push_back(0);
    }
    inst.token_ids.push_back(Vocabulary::sep_id);
    inst.segment_ids.push_back(0);
    if (pair) {
        for (const std::string& tok : b) {
            inst.token_ids.push_back(vocab.id(tok));
            inst.segment_ids.push_back(1);
        }
        inst.token_ids.push_back(Vocabulary::sep_id);
        inst.segment_ids.push_back(1);
    }
    const int real = static_cast<int>(inst.token_ids.size());
    inst.attention_mask.assign(static_cast<std::size_t>(real), 1);
    while (static_cast<int>(inst.token_ids.size()) < max_seq_len) {
        inst.token_ids.push_back(Vocabulary::pad_id);
        inst.segment_ids.push_back(0);
        inst.attention_mask.push_back(0);
    }
    inst.position_ids.resize(static_cast<std::size_t>(max_seq_len));
    for (int i = 0; i < max_seq_len; ++i) {
        inst.position_ids[static_cast<std::size_t>(i)] = i;
    }
    return inst;
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> cols;
    std::size_t start = 0;
    for (;;) {
        const std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            cols.push_back(line.substr(start));
            break;
        }
        cols.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return cols;
}

} // namespace

Dataset load_dataset(const std::string& path, const Vocabulary& vocab,
                     int max_seq_len,
                     const std::vector<std::string>* fixed_label_set) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open dataset file: " + path);
    }
    Dataset ds;
    ds.max_seq_len = max_seq_len;
    if (fixed_label_set) {
        ds.label_set = *fixed_label_set;
    }
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const std::vector<std::string> cols = split_tabs(line);
        if (cols.size() != 2 && cols.size() != 3) {
            throw ParseError(path + ":" + std::to_string(line_no) +
                             ": expected 2 or 3 tab-separated columns, got " +
                             std::to_string(cols.size()));
        }
        if (cols[0].empty()) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": empty label");
        }
        const auto it = std::find(ds.label_set.begin(), ds.label_set.end(), cols[0]);
        int label;
        if (it != ds.label_set.end()) {
            label = static_cast<int>(it - ds.label_set.begin());
        } else if (fixed_label_set) {
            throw ParseError(path + ":" + std::to_string(line_no) +
                             ": unknown label '" + cols[0] + "'");
        } else {
            label = static_cast<int>(ds.label_set.size());
            ds.label_set.push_back(cols[0]);
        }
        std::optional<std::string> text_b;
        if (cols.size() == 3) {
            text_b = cols[2];
        }
        ds.instances.push_back(
            encode_instance(cols[1], text_b, label, vocab, max_seq_len));
        ds.texts_a.push_back(cols[1]);
        ds.texts_b.push_back(cols.size() == 3 ? cols[2] : std::string{});
    }
    return ds;
}

void save_dataset(const Dataset& dataset, const std::string& path) {
    if (dataset.texts_a.size() != dataset.instances.size()) {
        throw ContractError("save_dataset: dataset has no raw texts to write");
    }
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write dataset file: " + path);
    }
    for (std::size_t i = 0; i < dataset.instances.size(); ++i) {
        const int label = dataset.instances[i].label;
        out << dataset.label_set[static_cast<std::size_t>(label)] << '\t'
            << dataset.texts_a[i];
        if (!dataset.texts_b[i].empty()) {
            out << '\t' << dataset.texts_b[i];
        }
        out << '\n';
    }
}

std::vector<std::string> load_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open corpus file: " + path);
    }
    std::vector<std::string> corpus;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (!line.empty()) {
            corpus.push_back(line);
        }
    }
    return corpus;
}

std::uint64_t dataset_checksum(const Dataset& dataset) {
    io::Fnv1a h;
    h.add_u64(dataset.instances.size());
    h.add_u64(static_cast<std::uint64_t>(dataset.max_seq_len));
    for (const std::string& l : dataset.label_set) {
        h.add_string(l);
    }
    for (const EncodedInstance& inst : dataset.instances) {
        for (int v : inst.token_ids) h.add_u64(static_cast<std::uint64_t>(v));
        for (int v : inst.segment_ids) h.add_u64(static_cast<std::uint64_t>(v));
        for (int v : inst.attention_mask) h.add_u64(static_cast<std::uint64_t>(v));
        h.add_u64(static_cast<std::uint64_t>(inst.label));
    }
    return h.value();
}

} // namespace textsmooth
