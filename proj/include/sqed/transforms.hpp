#ifndef SQED_TRANSFORMS_HPP
#define SQED_TRANSFORMS_HPP

#include <utility>
#include <vector>

#include "sqed/isa.hpp"

namespace sqed {

// Parameters shared by the test transformations. Each core owns a four-word
// scratch region at the top of the original memory half (save slots, the
// signature word and the signature counter), mirrored into the duplicate half.
struct TransformParams {
  int inst_min = 100;
  int inst_max = 100;
  std::vector<std::pair<int, int>> plc_list;  // (A, A') with A' = dup(A)
  long stop_count = 0;                        // CFTSS STOP; 0 = never
  int core_index = 0;
  int reserved_cores = 2;  // cores whose scratch regions are protected

  int scratch_base(const IsaSpec& spec) const {
    return spec.half_mem() - 4 * (core_index + 1);
  }
  int reserved_floor(const IsaSpec& spec) const {
    return spec.half_mem() - 4 * reserved_cores;
  }
};

// Scratch slot roles within a core's reserved region.
enum ScratchSlot { kSaveR1 = 0, kSaveR14 = 1, kSignatureWord = 2, kCounterWord = 3 };

// Basic blocks of a program with unique per-block signatures and predecessor
// sets; inst_max > 0 additionally chops long blocks into windows.
struct SignatureTable {
  std::vector<int> block_start;
  std::vector<int> block_len;
  std::vector<Word> signature;
  std::vector<std::vector<int>> preds;  // block ids; -1 denotes program entry

  int block_of(int index) const;
};

SignatureTable make_signature_table(const Program& p, int inst_max = 0);

// EDDI-V: duplicate initialization MOVIs inline, duplicate every window of
// [inst_min, inst_max] originals onto the reserved halves, insert Normal,
// Load and Store checks. Window seams are labeled __w<k> for PLC.
Program eddi_v(const Program& p, const TransformParams& t,
               const IsaSpec& spec = {});

// PLC: one proactive load-and-check operation per (A, A') pair at the program
// start and at every EDDI window seam. Identity (with a warning flag) when
// plc_list is empty.
Program plc(const Program& p, const TransformParams& t, const IsaSpec& spec = {},
            bool* warned_empty = nullptr);

// CFCSS-V: per-block prologue comparing the signature word against all
// predecessors' signatures, then updating it.
Program cfcss_v(const Program& p, const TransformParams& t,
                const IsaSpec& spec = {});

// CFTSS-V: per-block prologue storing the block signature, incrementing the
// per-core signature counter, honoring STOP, leaving every register unchanged.
Program cftss_v(const Program& p, const TransformParams& t,
                const IsaSpec& spec = {});

}  // namespace sqed

#endif
