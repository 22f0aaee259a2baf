//! Published per-subject accuracies and pass-count rows, in F1..FN6 order.

pub struct AccuracyRow {
    pub model: &'static str,
    pub acc: [f64; 14],
}

pub const ACCURACY_ROWS: [AccuracyRow; 8] = [
    AccuracyRow {
        model: "CA-ThinkFlow",
        acc: [
            77.78, 83.00, 40.00, 33.33, 33.33, 40.00, 66.67, 75.00, 57.14, 73.33, 57.14, 40.00,
            26.67, 37.50,
        ],
    },
    AccuracyRow {
        model: "14B-Deepseek-R1",
        acc: [
            47.47, 70.00, 33.33, 33.33, 20.00, 20.00, 46.67, 56.25, 42.86, 60.00, 50.00, 13.33,
            6.67, 25.00,
        ],
    },
    AccuracyRow {
        model: "GPT-4o",
        acc: [
            50.00, 58.00, 46.66, 73.33, 20.00, 20.00, 86.66, 75.00, 71.43, 53.33, 78.57, 53.33,
            33.33, 41.67,
        ],
    },
    AccuracyRow {
        model: "LLaMA-3.3-70B-Instruct",
        acc: [
            59.00, 56.00, 33.33, 60.00, 40.00, 40.00, 73.33, 75.00, 64.29, 33.33, 71.43, 53.33,
            6.67, 20.83,
        ],
    },
    AccuracyRow {
        model: "LLaMA-3.1-405B-Instruct",
        acc: [
            53.00, 59.00, 40.00, 53.33, 20.00, 40.00, 86.66, 56.25, 64.29, 46.67, 71.43, 13.33,
            26.67, 41.67,
        ],
    },
    AccuracyRow {
        model: "Mistral-Large",
        acc: [
            41.00, 56.00, 41.66, 53.33, 31.25, 20.00, 73.33, 60.00, 42.86, 41.67, 57.14, 46.67,
            13.33, 29.17,
        ],
    },
    AccuracyRow {
        model: "Claude-3.5-Sonnet",
        acc: [
            60.00, 60.00, 33.33, 60.00, 20.00, 46.66, 93.33, 75.00, 78.57, 46.67, 64.29, 53.33,
            20.00, 62.50,
        ],
    },
    AccuracyRow {
        model: "Microsoft-Phi-4",
        acc: [
            56.00, 62.00, 46.66, 46.66, 33.33, 33.33, 66.66, 68.75, 64.29, 53.33, 57.14, 26.67,
            6.67, 41.67,
        ],
    },
];

pub struct PassRow {
    pub model: &'static str,
    pub passes: (u32, u32, u32),
    pub weighted: u32,
    /// Printed SRC percentage.
    pub src: f64,
}

pub const PASS_ROWS: [PassRow; 8] = [
    PassRow {
        model: "CA-ThinkFlow",
        passes: (2, 4, 4),
        weighted: 22,
        src: 68.75,
    },
    PassRow {
        model: "14B-Deepseek-R1",
        passes: (2, 2, 3),
        weighted: 15,
        src: 46.87,
    },
    PassRow {
        model: "GPT-4o",
        passes: (2, 4, 4),
        weighted: 22,
        src: 68.75,
    },
    PassRow {
        model: "LLaMA-3.3-70B-Instruct",
        passes: (2, 4, 3),
        weighted: 19,
        src: 59.38,
    },
    PassRow {
        model: "LLaMA-3.1-405B-Instruct",
        passes: (2, 4, 3),
        weighted: 19,
        src: 59.38,
    },
    PassRow {
        model: "Mistral-Large",
        passes: (2, 3, 4),
        weighted: 20,
        src: 62.50,
    },
    PassRow {
        model: "Claude-3.5-Sonnet",
        passes: (2, 4, 4),
        weighted: 22,
        src: 68.75,
    },
    PassRow {
        model: "Microsoft-Phi-4",
        passes: (2, 4, 3),
        weighted: 19,
        src: 59.38,
    },
];

pub fn accuracy_row(model: &str) -> &'static AccuracyRow {
    ACCURACY_ROWS
        .iter()
        .find(|r| r.model == model)
        .expect("known model")
}

pub fn pass_row(model: &str) -> &'static PassRow {
    PASS_ROWS
        .iter()
        .find(|r| r.model == model)
        .expect("known model")
}
