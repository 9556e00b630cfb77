#pragma once

// Porter (1980) suffix-stripping stemmer for lowercase ASCII English words.

#include <string>
#include <string_view>

namespace dvcseq {

namespace detail {

class PorterStemmer {
public:
    explicit PorterStemmer(std::string_view word) : b_(word), k_(static_cast<int>(word.size()) - 1) {}

    std::string run() {
        if (k_ <= 1) return b_;
        step1ab();
        if (k_ > 0) {
            step1c();
            step2();
            step3();
            step4();
            step5();
        }
        return b_.substr(0, static_cast<std::size_t>(k_ + 1));
    }

private:
    bool cons(int i) const {
        switch (b_[static_cast<std::size_t>(i)]) {
            case 'a': case 'e': case 'i': case 'o': case 'u': return false;
            case 'y': return i == 0 ? true : !cons(i - 1);
            default: return true;
        }
    }

    // Number of VC sequences in b[0..j].
    int m() const {
        int n = 0;
        int i = 0;
        while (true) {
            if (i > j_) return n;
            if (!cons(i)) break;
            ++i;
        }
        ++i;
        while (true) {
            while (true) {
                if (i > j_) return n;
                if (cons(i)) break;
                ++i;
            }
            ++i;
            ++n;
            while (true) {
                if (i > j_) return n;
                if (!cons(i)) break;
                ++i;
            }
            ++i;
        }
    }

    bool vowel_in_stem() const {
        for (int i = 0; i <= j_; ++i) {
            if (!cons(i)) return true;
        }
        return false;
    }

    bool double_consonant(int j) const {
        if (j < 1) return false;
        if (b_[static_cast<std::size_t>(j)] != b_[static_cast<std::size_t>(j - 1)]) return false;
        return cons(j);
    }

    // consonant-vowel-consonant ending at i, last not w, x or y.
    bool cvc(int i) const {
        if (i < 2 || !cons(i) || cons(i - 1) || !cons(i - 2)) return false;
        const char ch = b_[static_cast<std::size_t>(i)];
        return ch != 'w' && ch != 'x' && ch != 'y';
    }

    bool ends(std::string_view s) {
        const int len = static_cast<int>(s.size());
        if (len > k_ + 1) return false;
        if (std::string_view(b_).substr(static_cast<std::size_t>(k_ + 1 - len), s.size()) != s) return false;
        j_ = k_ - len;
        return true;
    }

    void set_to(std::string_view s) {
        b_.replace(static_cast<std::size_t>(j_ + 1), static_cast<std::size_t>(k_ - j_), s);
        k_ = j_ + static_cast<int>(s.size());
    }

    void replace_if_measure(std::string_view s) {
        if (m() > 0) set_to(s);
    }

    char at(int i) const { return b_[static_cast<std::size_t>(i)]; }

    void step1ab() {
        if (at(k_) == 's') {
            if (ends("sses")) {
                k_ -= 2;
            } else if (ends("ies")) {
                set_to("i");
            } else if (at(k_ - 1) != 's') {
                --k_;
            }
        }
        if (ends("eed")) {
            if (m() > 0) --k_;
        } else if ((ends("ed") || ends("ing")) && vowel_in_stem()) {
            k_ = j_;
            if (ends("at")) {
                set_to("ate");
            } else if (ends("bl")) {
                set_to("ble");
            } else if (ends("iz")) {
                set_to("ize");
            } else if (double_consonant(k_)) {
                --k_;
                const char ch = at(k_);
                if (ch == 'l' || ch == 's' || ch == 'z') ++k_;
            } else if (j_ = k_, m() == 1 && cvc(k_)) {
                set_to("e");
            }
        }
    }

    void step1c() {
        if (ends("y") && vowel_in_stem()) b_[static_cast<std::size_t>(k_)] = 'i';
    }

    // Returns after the first matching suffix whether or not it was replaced.
    template <std::size_t N>
    void map_suffixes(const std::pair<std::string_view, std::string_view> (&rules)[N]) {
        for (const auto& [from, to] : rules) {
            if (ends(from)) {
                replace_if_measure(to);
                return;
            }
        }
    }

    void step2() {
        if (k_ < 1) return;
        switch (at(k_ - 1)) {
            case 'a': {
                static constexpr std::pair<std::string_view, std::string_view> r[] = {{"ational", "ate"},
                                                                                       {"tional", "tion"}};
                map_suffixes(r);
                break;
            }
            case 'c': {
                static constexpr std::pair<std::string_view, std::string_view> r[] = {{"enci", "ence"},
                                                                                       {"anci", "ance"}};
                map_suffixes(r);
                break;
            }
            case 'e': {
                static constexpr std::pair<std::string_view, std::string_view> r[] = {{"izer", "ize"}};
                map_suffixes(r);
                break;
            }
            case 'l': {
                static constexpr std::pair<std::string_view, std::string_view> r[] = {
                    {"bli", "ble"}, {"alli", "al"}, {"entli", "ent"}, {"eli", "e"}, {"ousli", "ous"}};
                map_suffixes(r);
                break;
            }
            case 'o': {
                static constexpr std::pair<std::string_view, std::string_view> r[] = {
                    {"ization", "ize"}, {"ation", "ate"}, {"ator", "ate"}};
                map_suffixes(r);
                break;
            }
            case 's': {
                static constexpr std::pair<std::string_view, std::string_view> r[] = {
                    {"alism", "al"}, {"iveness", "ive"}, {"fulness", "ful"}, {"ousness", "ous"}};
                map_suffixes(r);
                break;
            }
            case 't': {
                static constexpr std::pair<std::string_view, std::string_view> r[] = {
                    {"aliti", "al"}, {"iviti", "ive"}, {"biliti", "ble"}};
                map_suffixes(r);
                break;
            }
            case 'g': {
                static constexpr std::pair<std::string_view, std::string_view> r[] = {{"logi", "log"}};
                map_suffixes(r);
                break;
            }
            default: break;
        }
    }

    void step3() {
        switch (at(k_)) {
            case 'e': {
                static constexpr std::pair<std::string_view, std::string_view> r[] = {
                    {"icate", "ic"}, {"ative", ""}, {"alize", "al"}};
                map_suffixes(r);
                break;
            }
            case 'i': {
                static constexpr std::pair<std::string_view, std::string_view> r[] = {{"iciti", "ic"}};
                map_suffixes(r);
                break;
            }
            case 'l': {
                static constexpr std::pair<std::string_view, std::string_view> r[] = {{"ical", "ic"}, {"ful", ""}};
                map_suffixes(r);
                break;
            }
            case 's': {
                static constexpr std::pair<std::string_view, std::string_view> r[] = {{"ness", ""}};
                map_suffixes(r);
                break;
            }
            default: break;
        }
    }

    void step4() {
        if (k_ < 1) return;
        bool matched = false;
        switch (at(k_ - 1)) {
            case 'a': matched = ends("al"); break;
            case 'c': matched = ends("ance") || ends("ence"); break;
            case 'e': matched = ends("er"); break;
            case 'i': matched = ends("ic"); break;
            case 'l': matched = ends("able") || ends("ible"); break;
            case 'n': matched = ends("ant") || ends("ement") || ends("ment") || ends("ent"); break;
            case 'o':
                matched = (ends("ion") && j_ >= 0 && (at(j_) == 's' || at(j_) == 't')) || ends("ou");
                break;
            case 's': matched = ends("ism"); break;
            case 't': matched = ends("ate") || ends("iti"); break;
            case 'u': matched = ends("ous"); break;
            case 'v': matched = ends("ive"); break;
            case 'z': matched = ends("ize"); break;
            default: break;
        }
        if (matched && m() > 1) k_ = j_;
    }

    void step5() {
        j_ = k_;
        if (at(k_) == 'e') {
            const int a = m();
            if (a > 1 || (a == 1 && !cvc(k_ - 1))) --k_;
        }
        if (at(k_) == 'l' && double_consonant(k_) && m() > 1) --k_;
    }

    std::string b_;
    int k_ = 0;
    int j_ = 0;
};

}  // namespace detail

inline std::string porter_stem(std::string_view word) { return detail::PorterStemmer(word).run(); }

}  // namespace dvcseq
