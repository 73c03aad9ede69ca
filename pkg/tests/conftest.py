import pytest

from tablechain.table import load_csv

MOVIES_CSV = (
    b"title,box_office,cost\n"
    b"A,100,50\n"
    b"B,300,100\n"
    b"C,60,80\n"
    b"D,240,120\n"
    b"E,90,30\n"
    b"F,30,20\n"
)


@pytest.fixture
def movies_csv() -> bytes:
    return MOVIES_CSV


@pytest.fixture
def movies():
    return load_csv(MOVIES_CSV, table_name="movies")
