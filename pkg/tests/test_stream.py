import pytest

from errors import StreamExhaustedError, StreamFormatError
from feedback.channel import StreamChannel
from feedback.observer import ErrorCause, ErrorJudgment
from feedback.stream import ProbabilityStream, load_probability_stream, write_probability_stream
from tests.conftest import write_yaml


def test_replays_file_verbatim(tmp_path):
    path = write_yaml(tmp_path / "p.csv", "step,p\n0,0.1\n1,0.9\n2,0.5\n")
    channel = StreamChannel(load_probability_stream(path))
    error = ErrorJudgment(True, ErrorCause.COLLISION)
    got = [channel.sample(error).p for _ in range(3)]
    assert got == [0.1, 0.9, 0.5]


def test_out_of_range_probability_names_its_row(tmp_path):
    path = write_yaml(tmp_path / "p.csv", "step,p\n0,0.1\n1,0.2\n2,1.3\n")
    with pytest.raises(StreamFormatError) as info:
        load_probability_stream(path)
    assert info.value.row == 4
    assert "row 4" in str(info.value)


def test_step_gap_rejected(tmp_path):
    path = write_yaml(tmp_path / "p.csv", "step,p\n0,0.1\n2,0.2\n")
    with pytest.raises(StreamFormatError) as info:
        load_probability_stream(path)
    assert info.value.row == 3


def test_repeated_step_rejected(tmp_path):
    path = write_yaml(tmp_path / "p.csv", "step,p\n0,0.1\n1,0.2\n1,0.3\n")
    with pytest.raises(StreamFormatError):
        load_probability_stream(path)


@pytest.mark.parametrize("body", ["p,step\n0,0.1\n", "step,p\n0\n", "step,p\n0,abc\n", "step,p\nx,0.1\n"])
def test_malformed_files(tmp_path, body):
    with pytest.raises(StreamFormatError):
        load_probability_stream(write_yaml(tmp_path / "p.csv", body))


def test_missing_file(tmp_path):
    with pytest.raises(StreamFormatError):
        load_probability_stream(str(tmp_path / "absent.csv"))


def test_written_stream_loads_back(tmp_path):
    values = [0.0, 0.123456789012, 1.0, 0.5]
    path = str(tmp_path / "p.csv")
    write_probability_stream(path, values)
    stream = load_probability_stream(path)
    assert [stream.next() for _ in range(len(stream))] == values


def test_exhausted_stream():
    stream = ProbabilityStream([0.3])
    assert stream.next() == 0.3
    assert stream.position == len(stream) == 1
    with pytest.raises(StreamExhaustedError) as info:
        stream.next()
    assert info.value.step == 1 and info.value.length == 1
