#pragma once

#include "blocklot/lottery.hpp"

#include <string>
#include <string_view>

namespace blocklot {

// Normative byte format. One `field=value\n` line per field, in this order:
//
//   event_id name announcement_date num_winners block_offset target_height
//   note channel_id open_tx_id subscribe_tx_ids draw_tx_id member_list
//   winner_list random_seed initial_random_key status organizer_digest
//
// Lists are comma-joined, binary values lowercase hex, timestamps ISO-8601
// UTC, absent values the literal UNDEFINED. In free-text fields `\` is written
// as `\\`, LF as `\n` and CR as `\r`. verifiable_random_key is never part of
// this encoding.
std::string canonical_serialize(const LotteryEvent& event);

// canonical_serialize(event) followed by a final
// `verifiable_random_key=<hex|UNDEFINED>\n` line. This is both the ledger
// value and the offline export file.
std::string export_event(const LotteryEvent& event);

// Strict inverse of export_event. Rejects (MalformedRecord) anything that does
// not re-serialize to the exact input bytes.
LotteryEvent parse_event(std::string_view text);

inline constexpr std::string_view kUndefined = "UNDEFINED";

} // namespace blocklot
