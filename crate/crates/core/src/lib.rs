//! Text annotation graphs: documents with token, mention and relation
//! layers, format conversion, arc-diagram layout and edit sessions.

pub mod api;
pub mod edit;
pub mod format;
pub mod graph;
pub mod layout;
pub mod render;
pub mod synth;
pub mod tree;
