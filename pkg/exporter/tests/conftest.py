import json

import pytest
import torch
from transformers import BertConfig, BertModel, BertTokenizerFast

# wordpiece vocabulary for the toy encoder; "##ing"/"##ed" force real
# subword splits so span alignment gets exercised
_VOCAB = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    "the", "a", "to", "is", "it", "on", "drive", "usb", "mount",
    "reboot", "network", "restart", "manager", "display", "try",
    "please", "help", "works", "now", "fail", "##ing", "##ed", "##s",
    ",", ".", "?", "!", "'",
]


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    """A tiny randomly initialized BERT checkpoint saved locally, so tests
    never touch the network. Fixed seed keeps the weights reproducible."""
    d = tmp_path_factory.mktemp("tiny-bert")
    vocab_file = d / "vocab.txt"
    vocab_file.write_text("\n".join(_VOCAB) + "\n")
    tokenizer = BertTokenizerFast(vocab_file=str(vocab_file), do_lower_case=True)
    tokenizer.save_pretrained(d)
    torch.manual_seed(0)
    config = BertConfig(
        vocab_size=len(_VOCAB),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=4,
        intermediate_size=64,
        max_position_embeddings=64,
    )
    BertModel(config).save_pretrained(d)
    return str(d)


@pytest.fixture
def toy_dataset(tmp_path):
    """Two-dialogue dataset in the pipeline's JSONL schema."""
    records = [
        {
            "dialogue_id": "toy-0",
            "context": ["please help, the usb drive is failing",
                        "try mounting it now"],
            "candidates": ["rebooting worked", "the display manager failed"],
            "positive_index": 0,
        },
        {
            "dialogue_id": "toy-1",
            "context": ["the network is failing on reboot"],
            "candidates": ["restart the network manager", "it works now!"],
            "positive_index": 0,
        },
    ]
    path = tmp_path / "toy.jsonl"
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    return path
