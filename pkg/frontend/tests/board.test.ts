import { beforeEach, describe, expect, it, vi } from "vitest";
import { renderBoard, type BoardHandlers } from "../src/board";
import { ApiError } from "../src/client";
import type { PendingEntry } from "../src/sync";
import { flush, makeTeam } from "./helpers";

function spyHandlers(overrides: Partial<BoardHandlers> = {}): {
  handlers: BoardHandlers;
  assign: ReturnType<typeof vi.fn>;
  unassign: ReturnType<typeof vi.fn>;
  setOvertime: ReturnType<typeof vi.fn>;
} {
  const assign = vi.fn().mockResolvedValue(undefined);
  const unassign = vi.fn().mockResolvedValue(undefined);
  const setOvertime = vi.fn().mockResolvedValue(undefined);
  return {
    handlers: { assign, unassign, setOvertime, ...overrides },
    assign,
    unassign,
    setOvertime,
  };
}

function drag(root: HTMLElement, taskId: string, target: Element): void {
  const card = root.querySelector(`.task-card[data-task="${taskId}"]`);
  expect(card).not.toBeNull();
  card?.dispatchEvent(new Event("dragstart", { bubbles: true }));
  target.dispatchEvent(new Event("drop", { bubbles: true }));
}

describe("task board", () => {
  let root: HTMLElement;

  beforeEach(() => {
    document.body.innerHTML = "";
    root = document.createElement("div");
    document.body.appendChild(root);
  });

  it("renders every task in exactly the column matching its status", () => {
    const { handlers } = spyHandlers();
    renderBoard(root, makeTeam(), [], handlers);

    const cards = root.querySelectorAll(".task-card");
    expect(cards.length).toBe(3);
    for (const card of cards) {
      const column = card.closest(".col");
      expect(column?.getAttribute("data-col")).toBe(card.getAttribute("data-status"));
    }
    expect(root.querySelectorAll('.task-card[data-task="S1-T1"]').length).toBe(1);
    expect(
      root.querySelector('.col[data-col="in-progress"] [data-task="S1-T1"]'),
    ).not.toBeNull();
    expect(root.querySelector('.col[data-col="done"] [data-task="S1-T3"]')).not.toBeNull();
  });

  it("marks specialist tasks apart from open ones", () => {
    const { handlers } = spyHandlers();
    renderBoard(root, makeTeam(), [], handlers);
    const specialist = root.querySelector('.task-card[data-task="S1-T1"]');
    const open = root.querySelector('.task-card[data-task="S1-T2"]');
    expect(specialist?.classList.contains("specialist")).toBe(true);
    expect(specialist?.querySelector(".role-badge")?.textContent).toBe("db");
    expect(open?.classList.contains("specialist")).toBe(false);
  });

  it("posts exactly one assign command per drop gesture", () => {
    const { handlers, assign } = spyHandlers();
    renderBoard(root, makeTeam(), [], handlers);
    const chip = root.querySelector('.member-chip[data-member="2"]');
    expect(chip).not.toBeNull();
    drag(root, "S1-T2", chip as Element);
    expect(assign).toHaveBeenCalledTimes(1);
    expect(assign).toHaveBeenCalledWith(2, "S1-T2");
  });

  it("refuses a drop on the Done column without posting anything", () => {
    const { handlers, assign, unassign, setOvertime } = spyHandlers();
    renderBoard(root, makeTeam(), [], handlers);
    const before = root.querySelector('.col[data-col="todo"] [data-task="S1-T2"]');
    expect(before).not.toBeNull();

    const done = root.querySelector('.lane[data-story="S1"] .col[data-col="done"]');
    drag(root, "S1-T2", done as Element);

    expect(assign).not.toHaveBeenCalled();
    expect(unassign).not.toHaveBeenCalled();
    expect(setOvertime).not.toHaveBeenCalled();
    const bar = root.querySelector(".error-bar");
    expect(bar?.getAttribute("data-code")).toBe("PROGRESS_ONLY");
    expect(bar?.classList.contains("hidden")).toBe(false);
    expect(
      root.querySelector('.col[data-col="todo"] [data-task="S1-T2"]'),
    ).not.toBeNull();
  });

  it("shows a server rejection inline and leaves the board unchanged", async () => {
    const { handlers } = spyHandlers({
      assign: vi
        .fn()
        .mockRejectedValue(new ApiError("SPECIALIST_MISMATCH", "Gene lacks role db", 409)),
    });
    renderBoard(root, makeTeam(), [], handlers);
    const html = root.querySelector(".lanes")?.innerHTML;

    const chip = root.querySelector('.member-chip[data-member="2"]');
    drag(root, "S1-T1", chip as Element);
    await flush();

    const bar = root.querySelector(".error-bar");
    expect(bar?.getAttribute("data-code")).toBe("SPECIALIST_MISMATCH");
    expect(bar?.textContent).toContain("SPECIALIST_MISMATCH");
    expect(root.querySelector(".lanes")?.innerHTML).toBe(html);
    expect(
      root.querySelector('.col[data-col="in-progress"] [data-task="S1-T1"]'),
    ).not.toBeNull();
  });

  it("posts one overtime command in tick units when the slider moves", () => {
    const { handlers, setOvertime } = spyHandlers();
    renderBoard(root, makeTeam(), [], handlers);
    const slider = root.querySelector<HTMLInputElement>('input[data-ot-member="1"]');
    expect(slider).not.toBeNull();
    expect(slider?.max).toBe("4");
    if (slider) {
      slider.value = "4";
      slider.dispatchEvent(new Event("change", { bubbles: true }));
    }
    expect(setOvertime).toHaveBeenCalledTimes(1);
    expect(setOvertime).toHaveBeenCalledWith(1, 4);
  });

  it("posts one unassign command when a queued task is removed", () => {
    const { handlers, unassign } = spyHandlers();
    renderBoard(root, makeTeam(), [], handlers);
    const button = root.querySelector<HTMLButtonElement>(
      '.member-chip[data-member="1"] .assigned[data-task="S1-T1"] .unassign',
    );
    expect(button).not.toBeNull();
    button?.click();
    expect(unassign).toHaveBeenCalledTimes(1);
    expect(unassign).toHaveBeenCalledWith(1, "S1-T1");
  });

  it("marks tasks with in-flight commands as pending", () => {
    const { handlers } = spyHandlers();
    const pending: PendingEntry[] = [
      {
        key: 7,
        action: {
          kind: "command",
          teamId: "T1",
          command: { op: "assign-task", member: 2, task: "S1-T2", position: null },
        },
      },
    ];
    renderBoard(root, makeTeam(), pending, handlers);
    expect(
      root.querySelector('.task-card[data-task="S1-T2"]')?.classList.contains("pending"),
    ).toBe(true);
    expect(
      root.querySelector('.task-card[data-task="S1-T1"]')?.classList.contains("pending"),
    ).toBe(false);
  });
});
