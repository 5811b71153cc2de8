"""
Global configuration settings.
"""

# App Configuration
APP_TITLE = "R2M • Concepts-to-Sentence Workbench"
DEBUG_MODE = False
PORT = 8050

# Vocabulary
START_TOKEN = "<#start>"
END_TOKEN = "<#end>"
UNK_TOKEN = "<UNK>"
RESERVED_TOKENS = (START_TOKEN, END_TOKEN, UNK_TOKEN)

# Visual concepts
CONCEPT_THRESHOLD = 0.3
EVAL_ORDER_SEED = 0  # concept order used for every caption outside training

# Checkpoints
CHECKPOINT_MAGIC = b"R2M1"
CHECKPOINT_CONFIG_SUFFIX = ".cfg"
CHECKPOINT_VOCAB_SUFFIX = ".vocab"

# Dataset directory layout
CORPUS_FILE = "corpus.txt"
DICTIONARY_FILE = "dictionary.txt"
VOCAB_FILE = "vocab.tsv"
DETECTIONS_FILE = "detections.txt"
CAPTIONS_FILE = "captions.txt"
FEATURES_FILE = "features.txt"
SPLIT_FILES = {
    "corpus_train": "corpus_train.txt",
    "corpus_val": "corpus_val.txt",
    "image_train": "image_train.txt",
    "image_val": "image_val.txt",
    "image_test": "image_test.txt",
}

# Run directory layout
LOSS_CURVES_FILE = "loss_curves.csv"
EVAL_REPORT_FILE = "eval_report.txt"
ATTENTION_DIR = "attention"

# Desk-scale data generation
DEFAULT_N_CORPUS = 2000
DEFAULT_N_IMAGES = 500
DEFAULT_D_IMG = 64
SPLIT_FRACTIONS = {"train": 0.8, "val": 0.1, "test": 0.1}

# Chart Configuration
CHART_HEIGHT = 400
CHART_MARGIN = dict(t=20, r=20, b=40, l=40)
