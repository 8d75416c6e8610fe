#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mhpsc::modem {

// Binary LDPC code described by its parity-check matrix in alist form.
// Loading derives a systematic encoder by GF(2) Gaussian elimination with
// column pivoting: the m pivot columns carry parity, the remaining k = n - m
// columns carry information bits (in ascending column order). H must have
// full row rank.
struct LdpcCode {
    int n = 0;  // codeword bits (columns)
    int m = 0;  // checks (rows)
    std::vector<std::vector<int32_t>> row_cols;  // per check: participating bit indices
    std::vector<std::vector<int32_t>> col_rows;  // per bit: participating check indices

    std::vector<int32_t> info_cols;    // size k, ascending
    std::vector<int32_t> parity_cols;  // size m
    // parity bit i (at column parity_cols[i]) = <gen_rows[i], info bits> over GF(2),
    // packed 64 info bits per word.
    std::vector<std::vector<uint64_t>> gen_rows;

    int k() const { return n - m; }
};

LdpcCode ldpc_load_alist(const std::string& path);
LdpcCode ldpc_parse_alist(const std::string& text, const std::string& origin = "<memory>");
std::string ldpc_to_alist(const LdpcCode& code);

// info.size() == k; returns n codeword bits with zero syndrome.
std::vector<uint8_t> ldpc_encode(const LdpcCode& code, const std::vector<uint8_t>& info);

std::vector<uint8_t> ldpc_extract_info(const LdpcCode& code, const std::vector<uint8_t>& codeword);

bool ldpc_syndrome_ok(const LdpcCode& code, const std::vector<uint8_t>& bits);

struct LdpcDecodeResult {
    std::vector<uint8_t> codeword;  // hard decisions, n bits
    bool converged = false;         // zero syndrome reached
    int iterations = 0;
};

// Sum-product belief propagation on LLRs (positive = bit 0). Terminates early
// once the hard decisions satisfy every check.
LdpcDecodeResult ldpc_decode(const LdpcCode& code, const std::vector<double>& llr,
                             int max_iterations = 50);

// Deterministic (col_weight, row_weight)-regular code construction used to
// produce the shipped alist files; retries internally until H has full rank.
LdpcCode ldpc_generate_regular(int n, int col_weight, int row_weight, uint64_t seed);

}  // namespace mhpsc::modem
