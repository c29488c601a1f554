//! Per-round peeling traces.

use std::fmt::Write as _;

use aloha_core::DecodingResult;

/// One line per round: `iteration stations_resolved users_collected`.
pub fn render_trace(result: &DecodingResult) -> String {
    let mut out = String::from("iteration stations users\n");
    for (i, (stations, users)) in result
        .per_iteration_stations
        .iter()
        .zip(&result.per_iteration_collected)
        .enumerate()
    {
        let _ = writeln!(out, "{} {stations} {users}", i + 1);
    }
    out
}
