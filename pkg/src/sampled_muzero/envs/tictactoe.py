"""Tic-tac-toe and an exact negamax oracle."""
from __future__ import annotations

from functools import lru_cache
from typing import Optional

import numpy as np

LINES = ((0, 1, 2), (3, 4, 5), (6, 7, 8), (0, 3, 6), (1, 4, 7), (2, 5, 8), (0, 4, 8), (2, 4, 6))
EMPTY_BOARD = (0,) * 9


def winner(board: tuple) -> int:
    """1 or 2 if that player has three in a row, else 0."""
    for a, b, c in LINES:
        if board[a] and board[a] == board[b] == board[c]:
            return board[a]
    return 0


def player_to_move(board: tuple) -> int:
    """Player index (0 = X, 1 = O) to move; X always starts."""
    x, o = board.count(1), board.count(2)
    return 0 if x == o else 1


def check_legal(board: tuple) -> None:
    if len(board) != 9 or any(v not in (0, 1, 2) for v in board):
        raise ValueError("board must have 9 cells with values 0, 1 or 2")
    x, o = board.count(1), board.count(2)
    if x - o not in (0, 1):
        raise ValueError("impossible piece counts")
    w = winner(board)
    both = any(board[a] == 1 == board[b] == board[c] for a, b, c in LINES) and any(
        board[a] == 2 == board[b] == board[c] for a, b, c in LINES
    )
    if both or (w == 1 and x != o + 1) or (w == 2 and x != o):
        raise ValueError("impossible winning configuration")


class TicTacToe:
    """Two-player tic-tac-toe; states are 9-tuples (0 empty, 1 X, 2 O).

    The player who completes a line receives reward +1 on that move; the
    game is zero-sum so the opponent's outcome is the negation.
    """

    num_actions = 9
    two_player = True

    def initial_state(self, rng: Optional[np.random.Generator] = None) -> tuple:
        return EMPTY_BOARD

    def legal_mask(self, state: tuple) -> np.ndarray:
        if self.is_terminal(state):
            return np.zeros(9, dtype=bool)
        return np.array([v == 0 for v in state])

    def step(self, state: tuple, action: int):
        if state[action] != 0 or self.is_terminal(state):
            raise ValueError(f"illegal move {action}")
        mark = player_to_move(state) + 1
        board = state[:action] + (mark,) + state[action + 1:]
        if winner(board):
            return board, 1.0, True
        return board, 0.0, 0 not in board

    def is_terminal(self, state: tuple) -> bool:
        return bool(winner(state)) or 0 not in state

    def to_play(self, state: tuple) -> int:
        return player_to_move(state)

    def key(self, state: tuple) -> tuple:
        return tuple(state)

    def observation(self, state: tuple) -> np.ndarray:
        """Two binary planes (X, O) followed by the to-play scalar."""
        board = np.asarray(state)
        return np.concatenate([(board == 1).astype(np.float64), (board == 2).astype(np.float64),
                               [float(player_to_move(state))]])


@lru_cache(maxsize=None)
def _negamax(board: tuple) -> int:
    w = winner(board)
    if w:
        # the previous mover won, so the player to move has lost
        return -1
    if 0 not in board:
        return 0
    mark = player_to_move(board) + 1
    return max(-_negamax(board[:i] + (mark,) + board[i + 1:]) for i in range(9) if board[i] == 0)


def minimax(board: tuple) -> tuple[int, list[int]]:
    """Game value for the player to move (-1, 0, +1) and the list of optimal moves.

    Terminal positions have no moves; a finished game is valued from the
    point of view of the player who would move next.
    """
    board = tuple(board)
    check_legal(board)
    value = _negamax(board)
    if winner(board) or 0 not in board:
        return value, []
    mark = player_to_move(board) + 1
    moves = [i for i in range(9) if board[i] == 0 and -_negamax(board[:i] + (mark,) + board[i + 1:]) == value]
    return value, moves
