//! The relational label generator: a frozen encoder producing
//! `h = [h_E1, h_E2]` and a trainable softmax classifier head.
//!
//! Only the head is trainable, so `θ` and every gradient vector are the
//! flattened head parameters in the layout described on
//! [`PolicyParameters`].

mod checkpoint;
mod encoder;
mod head;
mod params;

pub use checkpoint::{parse_checkpoint, read_checkpoint, render_checkpoint, write_checkpoint, Checkpoint};
pub use encoder::{encode, encode_corpus, labeled_encodings, EncoderConfig, RelationalEncoding};
pub use head::{
    accuracy, cross_entropy, forward, grad_sample, loss_and_grad, mean_labeled_gradient,
    mean_loss, predict, pretrain, pretrain_with_history, Probabilities, SgdConfig,
    PROBABILITY_FLOOR,
};
pub use params::{Architecture, GradientVector, PolicyParameters, LAYOUT_TAG};

use crate::data::LabelId;

/// An encoded mention with its (gold or pseudo) label.
pub type LabeledEncoding = (RelationalEncoding, LabelId);
