//! Word-intrusion evaluation: task construction, detection-rate scoring,
//! significance of detection-rate differences, and simulated annotators.

mod annotator;
mod score;
mod significance;
mod task;

pub use annotator::{AnnotatorPolicy, CooccurrenceTable, Reference, SimulatedAnnotator, TopicAffinity};
pub use score::{score_detection_rate, AnnotationResponse, DetectionReport, TopicOutcome};
pub use significance::{
    dr_difference_test, exact_permutation_p, normal_approx_p, DifferenceTestResult, Direction, TestMethod,
};
pub use task::{
    build_intrusion_tasks, join_answer_key, load_tasks, read_answer_key, read_task_views, task_id, write_tasks,
    AnswerKeyEntry, IntrusionSettings, IntrusionTask, TaskView, DEFAULT_EXCLUSION_DEPTH, DEFAULT_TOPIC_WORDS,
};
