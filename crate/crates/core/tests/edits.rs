use std::path::Path;

use proptest::prelude::*;

use tag_core::edit::{replay, DiffLog, EditError, EditOp, Session};
use tag_core::format::files::load;
use tag_core::graph::{AnchorRef, Document};
use tag_core::synth::{random_presentation_session, random_session};

fn fig5() -> Document {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/fig5.ann");
    load(&path, None).unwrap().0.remove(0)
}

#[test]
fn delete_p53_cascades_and_undo_restores() {
    let base = fig5();
    let mut s = Session::new(base.clone(), None);
    let applied = s.apply(EditOp::Delete { id: "T2".into() }).unwrap();
    let mut removed = applied.removed.clone();
    removed.sort();
    assert_eq!(removed, ["E1", "E2", "E3", "T2"]);
    s.undo().unwrap();
    assert!(s.document().structurally_equal(&base));
}

#[test]
fn reattach_controller_to_p53() {
    let mut s = Session::new(fig5(), None);
    s.apply(EditOp::Reattach { relation_id: "E2".into(), arg_index: 0, target: AnchorRef::Mention("T2".into()) })
        .unwrap();
    let diff = DiffLog::from_jsonl(&s.export_diff().to_jsonl()).unwrap();
    let doc = replay(&fig5(), &diff).unwrap();
    assert_eq!(doc.relations["E2"].arguments[0].target, AnchorRef::Mention("T2".into()));
    assert_eq!(doc.relations["E1"], fig5().relations["E1"]);
}

#[test]
fn replay_onto_other_base_is_refused() {
    let mut s = Session::new(fig5(), None);
    s.apply(EditOp::Relabel { id: "E1".into(), label: "x".into() }).unwrap();
    let mut other = fig5();
    other.text.push('!');
    assert!(matches!(replay(&other, &s.export_diff()), Err(EditError::BaseMismatch { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn exported_diff_replays_to_live_state(seed in any::<u64>()) {
        let live = random_session(fig5(), seed, 30);
        let text = live.export_diff().to_jsonl();
        let diff = DiffLog::from_jsonl(&text).unwrap();
        prop_assert!(diff.entries.len() <= 30);
        let doc = replay(&fig5(), &diff).unwrap();
        prop_assert!(doc.structurally_equal(live.document()));
        let rebuilt = Session::replay(fig5(), None, &diff).unwrap();
        prop_assert_eq!(rebuilt.presentation(), live.presentation());
    }

    #[test]
    fn presentation_diffs_leave_document_alone(seed in any::<u64>(), ops in 0usize..30) {
        let live = random_presentation_session(fig5(), seed, ops);
        let diff = live.export_diff();
        prop_assert!(diff.presentation_only());
        prop_assert!(replay(&fig5(), &diff).unwrap().structurally_equal(&fig5()));
    }
}
