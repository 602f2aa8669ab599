//! Human annotation of topics and tweets, rogue-tweet isolation and the
//! agreement and precision diagnostics of the screening pass.

mod isolate;
mod labels;
mod store;

pub use isolate::{
    agreement, isolate_rogue, label_dataset, majority_labels, pairwise_agreement, read_labels_csv, rogue_precision,
    write_labels_csv, TopicConsensus,
};
pub use labels::{ClassLabel, TopicAnnotation, TopicLabel, TweetAnnotation};
pub use store::{read_log, AnnotationEvent, AnnotationStore, Appended, ItemKind};
