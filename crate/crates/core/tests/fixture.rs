//! Ten active users, eleven stations; user 9 hears nobody.

use aloha_core::decoders::{decode_cooperative, decode_noncooperative};
use aloha_core::BipartiteGraph;

fn fixture() -> BipartiteGraph {
    let stations: Vec<Vec<usize>> = vec![
        vec![0],
        vec![1],
        vec![1],
        vec![2],
        vec![3],
        vec![0, 4],
        vec![1, 2, 5],
        vec![3, 6],
        vec![4, 7],
        vec![5, 6, 8],
        vec![],
    ];
    BipartiteGraph::from_station_lists(10, stations).unwrap()
}

#[test]
fn noncooperative_collects_four() {
    let r = decode_noncooperative(&fixture());
    assert_eq!(r.collected_count(), 4);
    assert_eq!(
        r.collected,
        [true, true, true, true, false, false, false, false, false, false]
    );
}

#[test]
fn cooperative_collects_nine_in_three_rounds() {
    let g = fixture();
    let r = decode_cooperative(&g);
    assert_eq!(r.collected_count(), 9);
    assert!(!r.collected[9]);
    assert!(!g.is_covered(9));
    assert_eq!(r.iterations_run, 3);
    assert_eq!(r.per_iteration_collected, vec![4, 3, 2]);
    assert_eq!(r.per_iteration_stations, vec![5, 3, 2]);
}
