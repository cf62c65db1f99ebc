import subprocess
import sys

import pytest

from seqparse.cli import main
from seqparse.linearize import Scheme
from seqparse.treebank import format_sentence, parse_ptb, random_treebank, serialize, yield_of

from conftest import SAMPLE_TREE
from test_linearize import GOLDEN

TINY_CFG = """pretrained_dim = 3
word_dim = 2
pos_dim = 2
enc_input_dim = 3
enc_hidden = 2
dec_hidden = 4
att_hidden = 2
epochs = 2
learning_rate = 0.01
"""


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def corpus(tmp_path):
    trees = random_treebank(12, seed=2, max_depth=4, max_fanout=3, max_words=6)
    (tmp_path / "t.trees").write_text("".join(serialize(t) + "\n" for t in trees))
    (tmp_path / "t.snt").write_text("".join(format_sentence(yield_of(t)) + "\n" for t in trees))
    (tmp_path / "tiny.cfg").write_text(TINY_CFG)
    return tmp_path, trees


@pytest.fixture
def sample_file(tmp_path):
    path = tmp_path / "sample.trees"
    path.write_text(SAMPLE_TREE + "\n")
    (tmp_path / "sample.snt").write_text("The_DT public_NN is_VBZ still_RB cautious_JJ ._.\n")
    return path


def test_linearize_sample_short_scheme_name(capsys, sample_file):
    code, out, _ = run(capsys, "linearize", "--scheme", "inorder-enriched", sample_file)
    assert code == 0
    assert out == GOLDEN[Scheme.IN_ORDER_SR_ENRICHED] + "\n"


@pytest.mark.parametrize("scheme", [s.value for s in Scheme])
def test_linearize_then_strict_delinearize_is_identity(capsys, corpus, scheme):
    tmp, trees = corpus
    code, out, _ = run(capsys, "linearize", "--scheme", scheme, tmp / "t.trees")
    assert code == 0
    (tmp / "t.seq").write_text(out)
    code, out, _ = run(capsys, "delinearize", "--scheme", scheme, "--sentences", tmp / "t.snt",
                       tmp / "t.seq")
    assert code == 0
    assert parse_ptb(out) == trees


def test_delinearize_repair_and_strict_error(capsys, sample_file):
    tmp = sample_file.parent
    (tmp / "bad.seq").write_text("SH SH RE FI\n")
    code, out, _ = run(capsys, "delinearize", "--scheme", "inorder-sr", "--mode", "repair",
                       "--sentences", tmp / "sample.snt", tmp / "bad.seq")
    assert code == 0
    assert [l.word for l in yield_of(parse_ptb(out)[0])] == ["The", "public", "is", "still",
                                                              "cautious", "."]
    code, _, err = run(capsys, "delinearize", "--scheme", "inorder-sr", "--sentences",
                       tmp / "sample.snt", tmp / "bad.seq")
    assert code == 1 and "token 1" in err


def test_delinearize_line_count_mismatch(capsys, corpus):
    tmp, _ = corpus
    (tmp / "one.seq").write_text("NT(S) SH RE\n")
    code, _, err = run(capsys, "delinearize", "--scheme", "td-sr", "--sentences", tmp / "t.snt",
                       tmp / "one.seq")
    assert code == 1 and "sentences" in err


def test_oracle(capsys, sample_file):
    code, out, _ = run(capsys, "oracle", "--system", "in-order", sample_file)
    assert out.strip() == GOLDEN[Scheme.IN_ORDER_SR]


def test_eval_identity(capsys, corpus):
    tmp, _ = corpus
    code, out, _ = run(capsys, "eval", "--gold", tmp / "t.trees", "--pred", tmp / "t.trees")
    assert code == 0
    assert out.strip().splitlines()[-1] == "F1=100.0"


def test_eval_mismatch_is_a_data_error(capsys, corpus, sample_file):
    tmp, _ = corpus
    code, _, err = run(capsys, "eval", "--gold", tmp / "t.trees", "--pred", sample_file)
    assert code == 1 and "error" in err


def test_train_parse_bench_stats(capsys, corpus):
    tmp, trees = corpus
    ckpt = tmp / "m.npz"
    code, _, err = run(capsys, "--seed", 3, "train", "--config", tmp / "tiny.cfg", "--scheme",
                       "td-sr", "--attention", "det", "--out", ckpt, tmp / "t.trees")
    assert code == 0 and ckpt.exists() and "epoch 2" in err
    code, greedy, _ = run(capsys, "parse", "--model", ckpt, tmp / "t.snt")
    assert code == 0
    code, beam1, _ = run(capsys, "parse", "--model", ckpt, "--beam", 1, tmp / "t.snt")
    assert beam1 == greedy
    parsed = parse_ptb(greedy)
    assert [yield_of(t) for t in parsed] == [yield_of(t) for t in trees]
    code, beam3, _ = run(capsys, "parse", "--model", ckpt, "--beam", 3, "--attention", "prob",
                         tmp / "t.snt")
    assert code == 0 and len(parse_ptb(beam3)) == len(trees)
    code, out, _ = run(capsys, "--jobs", 2, "parse", "--model", ckpt, tmp / "t.snt")
    assert out == greedy
    code, out, _ = run(capsys, "bench", "--model", ckpt, "--attention", "prob", "--runs", 1,
                       "--count", 2, "--length", 5)
    assert code == 0 and "sentences_per_second=" in out
    code, out, _ = run(capsys, "bench", "--model", ckpt, "--runs", 1, "--gold", tmp / "t.trees")
    assert code == 0 and "sentences 12" in out
    code, out, _ = run(capsys, "stats", "--model", ckpt, tmp / "t.snt")
    assert code == 0 and "frequency_argmax_at_p_or_p1=" in out


def test_train_is_deterministic_per_seed(capsys, corpus):
    tmp, _ = corpus
    outs = []
    for name in ("a", "b"):
        run(capsys, "--seed", 5, "train", "--config", tmp / "tiny.cfg", "--scheme", "inorder-sr",
            "--out", tmp / f"{name}.npz", tmp / "t.trees")
        outs.append(run(capsys, "parse", "--model", tmp / f"{name}.npz", tmp / "t.snt")[1])
    assert outs[0] == outs[1]
    assert (tmp / "a.npz").read_bytes() == (tmp / "b.npz").read_bytes()


def test_gen_synthetic(capsys, tmp_path):
    code, out, _ = run(capsys, "--seed", 4, "gen-synthetic", "--trees", 5, "--max-words", 6,
                       "--sentences", tmp_path / "s.snt")
    trees = parse_ptb(out)
    assert code == 0 and len(trees) == 5
    assert all(len(yield_of(t)) <= 6 for t in trees)
    assert len((tmp_path / "s.snt").read_text().splitlines()) == 5
    assert run(capsys, "--seed", 4, "gen-synthetic", "--trees", 5, "--max-words", 6)[1] == out


def test_jobs_preserve_order(capsys, corpus):
    tmp, _ = corpus
    serial = run(capsys, "linearize", "--scheme", "td-bracket", tmp / "t.trees")[1]
    assert run(capsys, "--jobs", 3, "linearize", "--scheme", "td-bracket", tmp / "t.trees")[1] == serial


def test_data_errors_exit_1(capsys, tmp_path):
    (tmp_path / "bad.trees").write_text("(S (NP (DT a)")
    code, _, err = run(capsys, "linearize", "--scheme", "td-sr", tmp_path / "bad.trees")
    assert code == 1 and "byte offset" in err
    code, _, err = run(capsys, "linearize", "--scheme", "td-sr", tmp_path / "missing.trees")
    assert code == 1
    (tmp_path / "bad.cfg").write_text("epochs = lots\n")
    code, _, err = run(capsys, "train", "--config", tmp_path / "bad.cfg", "--out",
                       tmp_path / "m.npz", tmp_path / "bad.trees")
    assert code == 1
    (tmp_path / "junk.npz").write_bytes(b"not a checkpoint")
    (tmp_path / "s.snt").write_text("a_T\n")
    code, _, _ = run(capsys, "parse", "--model", tmp_path / "junk.npz", tmp_path / "s.snt")
    assert code == 1


@pytest.mark.parametrize("argv", [
    ["linearize", "--scheme", "nope"],
    ["frobnicate"],
    ["parse"],
    ["--jobs", "0", "linearize", "--scheme", "td-sr"],
])
def test_usage_errors_exit_2(argv):
    res = subprocess.run([sys.executable, "-m", "seqparse.cli", *argv], capture_output=True,
                         text=True, input="")
    assert res.returncode == 2
    assert "usage" in res.stderr


def test_console_script_help():
    res = subprocess.run([sys.executable, "-m", "seqparse.cli", "--help"], capture_output=True,
                         text=True)
    assert res.returncode == 0
    for cmd in ("linearize", "delinearize", "oracle", "train", "parse", "eval", "bench", "stats",
                "gen-synthetic"):
        assert cmd in res.stdout
