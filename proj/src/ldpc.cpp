#include "mhpsc/ldpc.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mhpsc/rng.hpp"

namespace mhpsc::modem {

namespace {

constexpr double kMsgClamp = 30.0;

[[noreturn]] void alist_fail(const std::string& origin, const std::string& what) {
    throw std::runtime_error("alist error in " + origin + ": " + what);
}

// Dense GF(2) row-reduction producing the systematic encoder tables.
void build_encoder(LdpcCode& code, const std::string& origin) {
    const int n = code.n, m = code.m;
    const int words = (n + 63) / 64;
    std::vector<std::vector<uint64_t>> r(m, std::vector<uint64_t>(words, 0));
    for (int row = 0; row < m; ++row)
        for (int c : code.row_cols[row]) r[row][c >> 6] ^= 1ull << (c & 63);

    auto bit = [&](int row, int col) { return (r[row][col >> 6] >> (col & 63)) & 1ull; };

    std::vector<int32_t> pivot_of_row(m, -1);
    std::vector<char> is_pivot(n, 0);
    int rank = 0;
    for (int col = 0; col < n && rank < m; ++col) {
        int sel = -1;
        for (int row = rank; row < m; ++row) {
            if (bit(row, col)) {
                sel = row;
                break;
            }
        }
        if (sel < 0) continue;
        std::swap(r[sel], r[rank]);
        for (int row = 0; row < m; ++row) {
            if (row != rank && bit(row, col)) {
                for (int w = 0; w < words; ++w) r[row][w] ^= r[rank][w];
            }
        }
        pivot_of_row[rank] = col;
        is_pivot[col] = 1;
        ++rank;
    }
    if (rank < m)
        alist_fail(origin, "rank-deficient parity-check matrix (rank " + std::to_string(rank) +
                               " < " + std::to_string(m) + ")");

    code.info_cols.clear();
    for (int col = 0; col < n; ++col)
        if (!is_pivot[col]) code.info_cols.push_back(col);
    code.parity_cols.assign(pivot_of_row.begin(), pivot_of_row.end());

    const int k = code.k();
    const int kwords = (k + 63) / 64;
    code.gen_rows.assign(m, std::vector<uint64_t>(kwords, 0));
    for (int row = 0; row < m; ++row) {
        for (int j = 0; j < k; ++j) {
            if (bit(row, code.info_cols[j])) code.gen_rows[row][j >> 6] ^= 1ull << (j & 63);
        }
    }
}

void finalize(LdpcCode& code, const std::string& origin) {
    code.col_rows.assign(code.n, {});
    for (int row = 0; row < code.m; ++row) {
        for (int c : code.row_cols[row]) {
            if (c < 0 || c >= code.n) alist_fail(origin, "column index out of range");
            code.col_rows[c].push_back(row);
        }
    }
    build_encoder(code, origin);
}

}  // namespace

LdpcCode ldpc_parse_alist(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    auto next_ints = [&](std::vector<long>& out) {
        out.clear();
        while (std::getline(in, line)) {
            std::istringstream ls(line);
            long v;
            while (ls >> v) out.push_back(v);
            if (!out.empty()) return;
        }
        alist_fail(origin, "unexpected end of file");
    };

    std::vector<long> t;
    next_ints(t);
    if (t.size() != 2 || t[0] <= 0 || t[1] <= 0) alist_fail(origin, "bad size line");
    const int n = static_cast<int>(t[0]), m = static_cast<int>(t[1]);
    if (m >= n) alist_fail(origin, "checks must be fewer than bits");
    next_ints(t);
    if (t.size() != 2 || t[0] <= 0 || t[1] <= 0) alist_fail(origin, "bad max-degree line");

    std::vector<long> col_deg, row_deg;
    next_ints(col_deg);
    if (static_cast<int>(col_deg.size()) != n) alist_fail(origin, "column degree list length");
    next_ints(row_deg);
    if (static_cast<int>(row_deg.size()) != m) alist_fail(origin, "row degree list length");

    // Column lists: recorded only to validate against the row lists.
    std::vector<std::vector<int32_t>> col_rows(n);
    for (int c = 0; c < n; ++c) {
        next_ints(t);
        for (long v : t) {
            if (v == 0) continue;  // zero padding
            if (v < 1 || v > m) alist_fail(origin, "row index out of range in column list");
            col_rows[c].push_back(static_cast<int32_t>(v - 1));
        }
        if (static_cast<long>(col_rows[c].size()) != col_deg[c])
            alist_fail(origin, "column " + std::to_string(c) + " degree mismatch");
    }

    LdpcCode code;
    code.n = n;
    code.m = m;
    code.row_cols.assign(m, {});
    for (int row = 0; row < m; ++row) {
        next_ints(t);
        for (long v : t) {
            if (v == 0) continue;
            if (v < 1 || v > n) alist_fail(origin, "column index out of range in row list");
            code.row_cols[row].push_back(static_cast<int32_t>(v - 1));
        }
        if (static_cast<long>(code.row_cols[row].size()) != row_deg[row])
            alist_fail(origin, "row " + std::to_string(row) + " degree mismatch");
        auto sorted = code.row_cols[row];
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            alist_fail(origin, "duplicate entry in row " + std::to_string(row));
    }

    // Cross-check the two adjacency views.
    std::vector<std::vector<int32_t>> from_rows(n);
    for (int row = 0; row < m; ++row)
        for (int c : code.row_cols[row]) from_rows[c].push_back(row);
    for (int c = 0; c < n; ++c) {
        auto a = from_rows[c];
        auto b = col_rows[c];
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        if (a != b) alist_fail(origin, "row/column lists disagree at column " + std::to_string(c));
    }

    finalize(code, origin);
    return code;
}

LdpcCode ldpc_load_alist(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open alist file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ldpc_parse_alist(ss.str(), path);
}

std::string ldpc_to_alist(const LdpcCode& code) {
    std::vector<std::vector<int32_t>> col_rows(code.n);
    for (int row = 0; row < code.m; ++row)
        for (int c : code.row_cols[row]) col_rows[c].push_back(row);
    size_t cmax = 0, rmax = 0;
    for (auto& v : col_rows) cmax = std::max(cmax, v.size());
    for (auto& v : code.row_cols) rmax = std::max(rmax, v.size());

    std::ostringstream out;
    out << code.n << " " << code.m << "\n" << cmax << " " << rmax << "\n";
    for (int c = 0; c < code.n; ++c) out << col_rows[c].size() << (c + 1 < code.n ? " " : "\n");
    for (int r = 0; r < code.m; ++r)
        out << code.row_cols[r].size() << (r + 1 < code.m ? " " : "\n");
    for (int c = 0; c < code.n; ++c) {
        for (size_t i = 0; i < col_rows[c].size(); ++i)
            out << col_rows[c][i] + 1 << (i + 1 < col_rows[c].size() ? " " : "");
        out << "\n";
    }
    for (int r = 0; r < code.m; ++r) {
        for (size_t i = 0; i < code.row_cols[r].size(); ++i)
            out << code.row_cols[r][i] + 1 << (i + 1 < code.row_cols[r].size() ? " " : "");
        out << "\n";
    }
    return out.str();
}

std::vector<uint8_t> ldpc_encode(const LdpcCode& code, const std::vector<uint8_t>& info) {
    if (static_cast<int>(info.size()) != code.k())
        throw std::runtime_error("ldpc_encode: expected " + std::to_string(code.k()) +
                                 " info bits, got " + std::to_string(info.size()));
    const int k = code.k();
    std::vector<uint64_t> u((k + 63) / 64, 0);
    for (int j = 0; j < k; ++j)
        if (info[j]) u[j >> 6] ^= 1ull << (j & 63);

    std::vector<uint8_t> cw(code.n, 0);
    for (int j = 0; j < k; ++j) cw[code.info_cols[j]] = info[j] & 1;
    for (int row = 0; row < code.m; ++row) {
        uint64_t acc = 0;
        for (size_t w = 0; w < u.size(); ++w) acc ^= code.gen_rows[row][w] & u[w];
        cw[code.parity_cols[row]] = static_cast<uint8_t>(std::popcount(acc) & 1);
    }
    return cw;
}

std::vector<uint8_t> ldpc_extract_info(const LdpcCode& code, const std::vector<uint8_t>& codeword) {
    std::vector<uint8_t> info(code.k());
    for (int j = 0; j < code.k(); ++j) info[j] = codeword[code.info_cols[j]] & 1;
    return info;
}

bool ldpc_syndrome_ok(const LdpcCode& code, const std::vector<uint8_t>& bits) {
    for (int row = 0; row < code.m; ++row) {
        int p = 0;
        for (int c : code.row_cols[row]) p ^= bits[c] & 1;
        if (p) return false;
    }
    return true;
}

LdpcDecodeResult ldpc_decode(const LdpcCode& code, const std::vector<double>& llr,
                             int max_iterations) {
    if (static_cast<int>(llr.size()) != code.n)
        throw std::runtime_error("ldpc_decode: expected " + std::to_string(code.n) + " LLRs");
    // Edge storage in row-major order.
    std::vector<int32_t> row_offset(code.m + 1, 0);
    for (int row = 0; row < code.m; ++row)
        row_offset[row + 1] = row_offset[row] + static_cast<int32_t>(code.row_cols[row].size());
    const int edges = row_offset[code.m];

    std::vector<double> v2c(edges), c2v(edges, 0.0);
    auto clamp = [](double x) {
        return x > kMsgClamp ? kMsgClamp : (x < -kMsgClamp ? -kMsgClamp : x);
    };
    for (int row = 0; row < code.m; ++row) {
        for (int j = 0; j < static_cast<int>(code.row_cols[row].size()); ++j)
            v2c[row_offset[row] + j] = clamp(llr[code.row_cols[row][j]]);
    }

    LdpcDecodeResult res;
    res.codeword.assign(code.n, 0);
    std::vector<double> total(code.n);
    std::vector<double> fwd, bwd;

    for (int it = 1; it <= max_iterations; ++it) {
        // Check-node update: exclusive tanh products via forward/backward scans.
        for (int row = 0; row < code.m; ++row) {
            const int deg = row_offset[row + 1] - row_offset[row];
            const int base = row_offset[row];
            fwd.assign(deg + 1, 1.0);
            bwd.assign(deg + 1, 1.0);
            for (int j = 0; j < deg; ++j) fwd[j + 1] = fwd[j] * std::tanh(0.5 * v2c[base + j]);
            for (int j = deg - 1; j >= 0; --j) bwd[j] = bwd[j + 1] * std::tanh(0.5 * v2c[base + j]);
            for (int j = 0; j < deg; ++j) {
                double p = fwd[j] * bwd[j + 1];
                if (p > 0.999999999999) p = 0.999999999999;
                if (p < -0.999999999999) p = -0.999999999999;
                c2v[base + j] = 2.0 * std::atanh(p);
            }
        }
        // Variable-node update and posterior.
        for (int v = 0; v < code.n; ++v) total[v] = llr[v];
        for (int row = 0; row < code.m; ++row) {
            for (int j = row_offset[row]; j < row_offset[row + 1]; ++j)
                total[code.row_cols[row][j - row_offset[row]]] += c2v[j];
        }
        for (int row = 0; row < code.m; ++row) {
            for (int j = row_offset[row]; j < row_offset[row + 1]; ++j) {
                const int v = code.row_cols[row][j - row_offset[row]];
                v2c[j] = clamp(total[v] - c2v[j]);
            }
        }
        for (int v = 0; v < code.n; ++v) res.codeword[v] = total[v] < 0.0 ? 1 : 0;
        res.iterations = it;
        if (ldpc_syndrome_ok(code, res.codeword)) {
            res.converged = true;
            return res;
        }
    }
    return res;
}

LdpcCode ldpc_generate_regular(int n, int col_weight, int row_weight, uint64_t seed) {
    if (n <= 0 || col_weight <= 0 || row_weight <= col_weight ||
        (static_cast<long>(n) * col_weight) % row_weight != 0)
        throw std::runtime_error("ldpc_generate_regular: inconsistent parameters");
    const int m = static_cast<int>(static_cast<long>(n) * col_weight / row_weight);
    const int edges = n * col_weight;

    for (uint64_t attempt = 0; attempt < 1000; ++attempt) {
        rng::Xoshiro256pp g(rng::derive_stream(seed, 0x4C44 + attempt));
        std::vector<int32_t> row_socket(edges);
        for (int e = 0; e < edges; ++e) row_socket[e] = static_cast<int32_t>(e / row_weight);
        // Fisher-Yates shuffle.
        for (int i = edges - 1; i > 0; --i) {
            const auto j = static_cast<int>(g.next() % static_cast<uint64_t>(i + 1));
            std::swap(row_socket[i], row_socket[j]);
        }
        // Repair parallel edges and 4-cycles by random socket swaps (degree
        // sequence is preserved); girth >= 6 keeps belief propagation honest
        // on short codes. Rescan after every fix.
        auto col_of = [&](int e) { return e / col_weight; };
        auto find_violation = [&]() -> int {
            // Parallel edge: one column hitting the same row twice.
            for (int c = 0; c < n; ++c) {
                for (int i = 0; i < col_weight; ++i)
                    for (int j = i + 1; j < col_weight; ++j)
                        if (row_socket[c * col_weight + i] == row_socket[c * col_weight + j])
                            return c * col_weight + j;
            }
            // 4-cycle: a row pair appearing in two different columns.
            std::vector<std::vector<std::pair<int64_t, int32_t>>> seen(m);
            for (int c = 0; c < n; ++c) {
                for (int i = 0; i < col_weight; ++i) {
                    for (int j = i + 1; j < col_weight; ++j) {
                        int32_t a = row_socket[c * col_weight + i];
                        int32_t b = row_socket[c * col_weight + j];
                        if (a > b) std::swap(a, b);
                        auto& bucket = seen[a];
                        const int64_t key = b;
                        bool dup = false;
                        for (auto& kv : bucket)
                            if (kv.first == key) dup = true;
                        if (dup) return c * col_weight + j;
                        bucket.push_back({key, c});
                    }
                }
            }
            return -1;
        };
        bool clean = false;
        for (int pass = 0; pass < 50000; ++pass) {
            const int e = find_violation();
            if (e < 0) {
                clean = true;
                break;
            }
            const auto f = static_cast<int>(g.next() % static_cast<uint64_t>(edges));
            std::swap(row_socket[e], row_socket[f]);
        }
        if (!clean) continue;

        LdpcCode code;
        code.n = n;
        code.m = m;
        code.row_cols.assign(m, {});
        for (int e = 0; e < edges; ++e) code.row_cols[row_socket[e]].push_back(col_of(e));
        for (auto& rc : code.row_cols) std::sort(rc.begin(), rc.end());
        try {
            finalize(code, "<generated>");
        } catch (const std::exception&) {
            continue;  // rank-deficient draw; retry
        }
        return code;
    }
    throw std::runtime_error("ldpc_generate_regular: failed to find a full-rank code");
}

}  // namespace mhpsc::modem
