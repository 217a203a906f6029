import json
import subprocess
import sys

import pytest

from qcsc.cli import load_classes, main
from qcsc.deferred import Sentence, classify_direct
from qcsc.pregroup import load_lexicon
from qcsc.store import load_store

CORPUS = """kids play football in the park. kids play games at school. adults play football on sunday.
the team play football and the kids watch. children play chess while adults read books.
john read a book in the library. mary read the paper. students read books at school.
the orchestra play music. musicians play music at night. kids hear music in the park.
"""
LEXICON = "kids\tn\nfootball\tn\nmusic\tn\nbooks\tn\nchess\tn\nadults\tn\nplay\tn^r s n^l\nread\tn^r s n^l\n"


@pytest.fixture
def store(tmp_path):
    (tmp_path / "corpus.txt").write_text(CORPUS)
    (tmp_path / "lex.tsv").write_text(LEXICON)
    rc = main(["ingest", "--corpus", str(tmp_path / "corpus.txt"), "--basis-size", "8", "--window", "3",
               "--lexicon", str(tmp_path / "lex.tsv"), "--out", str(tmp_path / "store")])
    assert rc == 0
    return tmp_path


def test_parse_emits_tree(tmp_path, capsys):
    (tmp_path / "lex.tsv").write_text(LEXICON)
    assert main(["parse", "--lexicon", str(tmp_path / "lex.tsv"), "--sentence", "kids play football",
                 "--emit-tree"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[-3:] == ["kids -- play", "play -- football", "# depth kids=1 play=0 football=1"]


def test_parse_ungrammatical_exit_code(tmp_path, capsys):
    (tmp_path / "lex.tsv").write_text(LEXICON)
    assert main(["parse", "--lexicon", str(tmp_path / "lex.tsv"), "--sentence", "kids football"]) == 1
    assert "ungrammatical" in capsys.readouterr().err


def test_nn_report(store, capsys):
    rep = store / "nn.json"
    assert main(["nn", "--store", str(store / "store"), "--query", "football", "--candidates", "music,chess",
                 "books", "--backend", "quantum", "--seed", "3", "--report", str(rep)]) == 0
    data = json.loads(rep.read_text())
    assert {"argmax", "estimates", "o_calls", "f_calls", "bound", "params", "seed"} <= set(data)
    assert data["seed"] == 3 and len(data["estimates"]) == 3
    assert main(["nn", "--store", str(store / "store"), "--query", "nothing", "--candidates", "music"]) == 1


def test_classify_direct_label_and_quantum_report(store, capsys):
    (store / "classes.tsv").write_text("sport\tfootball\nsport\tchess\nart\tmusic\nart\tbooks\n")
    base = ["classify", "--store", str(store / "store"), "--sentence", "kids play football",
            "--classes", str(store / "classes.tsv")]
    assert main(base) == 0
    direct = capsys.readouterr().out.split("\t")[0]
    assert main(base + ["--backend", "quantum", "--report", str(store / "c.json")]) == 0
    data = json.loads((store / "c.json").read_text())
    assert data["labels"] == ["sport", "sport", "art", "art"]
    store_map = load_store(store / "store")
    sent = Sentence.parse("kids play football", load_lexicon(store / "lex.tsv"), store_map)
    classes = load_classes(store / "classes.tsv", store_map)
    assert direct == classify_direct(sent, classes)[0]
    assert data["label"] in ("sport", "art")


def test_classify_bad_classes_file(store):
    (store / "classes.tsv").write_text("sport football\n")
    assert main(["classify", "--store", str(store / "store"), "--sentence", "kids play football",
                 "--classes", str(store / "classes.tsv")]) == 1


def test_table1_stdout_and_file(tmp_path, capsys):
    assert main(["table1", "--n", "2000", "--verbs", "1,10000"]) == 0
    assert capsys.readouterr().out.splitlines()[1:] == ["2000,1,8000000000,33", "2000,10000,80000000000000,47"]
    assert main(["table1", "--out", str(tmp_path / "t.csv")]) == 0
    assert (tmp_path / "t.csv").read_text().splitlines()[1] == "2000,1,8000000000,33"


def test_bench_exit_codes(tmp_path):
    ok = ["bench", "--sweep", "M", "--grid", "4:32:x2", "--backends", "direct", "--seeds", "2",
          "--out", str(tmp_path / "r.json"), "--csv", str(tmp_path / "p.csv"), "--assert-slopes"]
    assert main(ok) == 0
    assert json.loads((tmp_path / "r.json").read_text())["slopes"]["direct"]["slope"] == pytest.approx(1.0)
    assert main(["bench", "--grid", "4,8"]) == 2
    assert main(["bench", "--grid", "4:8:x0"]) == 2
    flat = ["bench", "--sweep", "N", "--grid", "16:128:x2", "--backends", "direct", "--seeds", "2",
            "--out", str(tmp_path / "n.json"), "--assert-slopes"]
    assert main(flat) == 3


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as err:
        main(["nn"])
    assert err.value.code == 2


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "qcsc.cli", "table1"], capture_output=True, text=True, check=True)
    assert "2000,1,8000000000,33" in out.stdout


def test_bench_kernels_command(capsys):
    assert main(["bench-kernels", "--sizes", "100", "--repeats", "1"]) == 0
    assert "sparse_dot" in capsys.readouterr().out
