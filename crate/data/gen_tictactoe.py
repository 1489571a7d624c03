"""Enumerate every terminal tic-tac-toe board reachable when x moves first.

Writes tic-tac-toe.csv in the layout of the UCI endgame database: nine
squares (top-left to bottom-right, values x/o/b) and a class column that is
"positive" exactly when x has three in a row.
"""
import csv
import sys

LINES = [(0, 1, 2), (3, 4, 5), (6, 7, 8), (0, 3, 6), (1, 4, 7), (2, 5, 8), (0, 4, 8), (2, 4, 6)]


def winner(board):
    for a, b, c in LINES:
        if board[a] != "b" and board[a] == board[b] == board[c]:
            return board[a]
    return None


def main(path):
    seen = set()
    stack = [("b" * 9, "x")]
    visited = set()
    while stack:
        board, player = stack.pop()
        if (board, player) in visited:
            continue
        visited.add((board, player))
        if winner(board) or "b" not in board:
            seen.add(board)
            continue
        nxt = "o" if player == "x" else "x"
        for i, cell in enumerate(board):
            if cell == "b":
                stack.append((board[:i] + player + board[i + 1:], nxt))
    squares = ["top-left", "top-middle", "top-right", "middle-left", "middle-middle",
               "middle-right", "bottom-left", "bottom-middle", "bottom-right"]
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(squares + ["class"])
        for board in sorted(seen):
            out.writerow(list(board) + ["positive" if winner(board) == "x" else "negative"])
    return seen


if __name__ == "__main__":
    boards = main(sys.argv[1] if len(sys.argv) > 1 else "tic-tac-toe.csv")
    pos = sum(1 for b in boards if winner(b) == "x")
    print(len(boards), pos, len(boards) - pos)
